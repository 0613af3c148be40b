from .experiment import HANDLERS, build_initial, run_experiment

__all__ = ["HANDLERS", "build_initial", "run_experiment"]
