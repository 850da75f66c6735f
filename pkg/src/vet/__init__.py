"""Bidirectional tactile interface simulation.

One half senses: an elastomer membrane imaged from behind, where contact
shows up as an intensity deficit that can be inverted back into depth,
contact geometry, flow, and force. The other half actuates: charge-balanced
electrotactile pulse trains routed through a switch matrix onto fingertip
electrodes, with closed-loop current regulation against a drifting skin
load. A small binary protocol and a WebSocket gateway tie the two halves
to applications (zone perception runs, a flow-steered flight game, a
gripper teleop harness).
"""

__version__ = "0.1.0"

from .config import VetConfig, default_config, load_config
from .frames import TactileFrame

__all__ = ["VetConfig", "default_config", "load_config", "TactileFrame", "__version__"]
