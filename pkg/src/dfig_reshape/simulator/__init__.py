"""Nonlinear average-model simulation, frequency scans and spectra."""

from .engine import dominant_modes, initial_state, kernel_params, linearize, run_scenario
from .scan import DevicePlant, RLPlant, ScanMeasurement, frequency_scan, scan_point
from .scenario import Event, SimScenario, TimeSeries
from .spectrum import Peak, amplitude_spectrum, fft_peaks, growth_rate, signal_peaks, window_envelope

__all__ = [
    "DevicePlant", "Event", "Peak", "RLPlant", "ScanMeasurement", "SimScenario", "TimeSeries",
    "amplitude_spectrum", "dominant_modes", "fft_peaks", "frequency_scan", "growth_rate",
    "initial_state", "kernel_params", "linearize", "run_scenario", "scan_point", "signal_peaks",
    "window_envelope",
]
