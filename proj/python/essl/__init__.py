# Copyright (c) 2026, The ESSL Authors. All rights reserved.
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

"""Packed image dataset loader."""

import json as _json

from ._core import (ConfigError, CorruptionError, DecodeError, Error, FormatError, IoError, LoaderSession,
                    RangeError, build_container, masked_count, schedule_json, scheme_names)
from ._core import reference_batch as _reference_batch

__all__ = ["open_loader", "LoaderSession", "build_container", "masked_count", "reference_batch",
           "schedule_json", "scheme_names", "Error", "ConfigError", "RangeError", "IoError", "FormatError",
           "CorruptionError", "DecodeError"]


def _to_text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def open_loader(config):
    """Opens a loader session from a JSON string or dict.

    Iterating yields (pixels, labels, masks) NumPy views of the batch buffers
    until the epoch ends; call set_epoch() to start the next one.
    """
    return LoaderSession(_to_text(config))


def reference_batch(config, epoch, batch):
    """Batch `batch` of `epoch` computed by a fresh loader (owned copies)."""
    return _reference_batch(_to_text(config), epoch, batch)
