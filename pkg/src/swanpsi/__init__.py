"""Swan conductors, refined Swan conductors and psi^ab for towers of local fields
of characteristic p, computed exactly."""

from .errors import *  # noqa: F401,F403
from .logdiff import LogForm, delta_a, delta_tor, differential_of_element, lift_form, v_log
from .psi import PiecewiseLinear, compose, construct_psi, inverse, property_check, psi_for_tower
from .swan import (ASWCharacter, base_change_character, reduce_to_best, refined_swan,
                   swan_conductor, swan_from_rsw)
from .tower import FieldElement, LocalFieldTower, TowerStep, build_tower, probe_extend, tame_twist
from .witt import WittVector, d_map, ghost_identity_holds

__version__ = "0.1.0"
