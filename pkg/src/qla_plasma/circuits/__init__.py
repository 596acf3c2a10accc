"""Gate IR, dense simulation, cost accounting and synthesis of the QLA circuits."""

from .cost import CostModel, GateCounts, gate_count
from .ir import Gate, GateCircuit, lower_open_controls
from .simulate import apply_circuit, circuit_to_matrix
from .synth import (QubitLayout, synth_coin, synth_cyclotron, synth_increment, synth_kinetic,
                    synth_lcu, synth_plasma_potential, synth_qla_step, synth_select, synth_stream,
                    synth_two_level_ry)

__all__ = [
    "CostModel", "Gate", "GateCircuit", "GateCounts", "QubitLayout", "apply_circuit",
    "circuit_to_matrix", "gate_count", "lower_open_controls", "synth_coin", "synth_cyclotron",
    "synth_increment", "synth_kinetic", "synth_lcu", "synth_plasma_potential", "synth_qla_step",
    "synth_select", "synth_stream", "synth_two_level_ry",
]
