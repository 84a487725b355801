# Copyright 2026 The biff Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Joint multi-agent trajectory forecasting (C++ core with Python bindings)."""

from ._biff import (
    AnchorModel,
    BiffError,
    Config,
    ConfigError,
    DataError,
    DimensionError,
    Forecaster,
    NumericError,
    ParseError,
    Scene,
    SchemaError,
    from_frame,
    generate_scenes,
    read_scenes,
    run_checks,
    templates,
    to_frame,
    wrap_angle,
    write_scenes,
)

__all__ = [
    "AnchorModel",
    "BiffError",
    "Config",
    "ConfigError",
    "DataError",
    "DimensionError",
    "Forecaster",
    "NumericError",
    "ParseError",
    "Scene",
    "SchemaError",
    "from_frame",
    "generate_scenes",
    "read_scenes",
    "run_checks",
    "templates",
    "to_frame",
    "wrap_angle",
    "write_scenes",
]
