"""
Fractal Lq Toolkit - Commands Package
"""

from components.commands.geometry_commands import run_intersect, run_project, run_slice, run_sumset
from components.commands.separation_command import run_separation
from components.commands.spectrum_command import run_spectrum
from components.commands.witness_command import run_witness

COMMANDS = {
    'spectrum': run_spectrum,
    'separation': run_separation,
    'intersect': run_intersect,
    'slice': run_slice,
    'sumset': run_sumset,
    'witness': run_witness,
    'project': run_project,
}
