# Copyright 2026 The EDGC Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Entropy-driven low-rank gradient compression (EDGC) core bindings."""

from ._edgc import (
    CalibrationError,
    CommModel,
    Compressor,
    DegenerateInputError,
    DimensionError,
    DivergenceError,
    EdgcError,
    FormatError,
    GTable,
    InfeasibleCompressionError,
    LinearCost,
    NumericError,
    PipelineConfig,
    RangeError,
    StageSpec,
    StageTiming,
    align_stage_ranks,
    calibrate_comm_model,
    clamp_step,
    compressed_element_count,
    compute_rank_bounds,
    decompress,
    entropy_gaussian,
    entropy_histogram,
    estimate_g,
    mp_cdf,
    mp_support,
    optimal_rank_r_error,
    rank_from_entropy,
    rank_from_sigma,
    run_cli,
    sample_eigenvalues,
    simulate_iteration,
    simulate_training,
    singular_values,
    subsample_entries,
    train_toy,
)

__version__ = "0.1.0"
__all__ = [name for name in dir() if not name.startswith("_")]
