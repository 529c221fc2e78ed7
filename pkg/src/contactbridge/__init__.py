"""Contact-simulation middleware: typed pub/sub bus around a rigid-body
contact engine, with simulated sensors, teleoperation mapping, a safety
guard, recording, and a web operator gateway."""

__version__ = "0.1.0"
