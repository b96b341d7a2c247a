"""Vision-only racing workbench: simulator, renderer, attention policy, PPO."""

__version__ = "0.1.0"
