#!/usr/bin/env python3
# Copyright 2026 The pfpl-se Authors
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

"""Convert a fairseq wav2vec (v1) checkpoint into a pfpl encoder archive.

    convert_wav2vec.py wav2vec_large.pt wav2vec_large.pfpl

Only the feature extractor and the context network are kept; the
prediction heads are dropped. The result loads with `--encoder <file>`.
"""

import argparse
import ast
import math
import pathlib
import struct
import sys

import numpy as np
import torch

EXTRACTOR = "feature_extractor.conv_layers."
AGGREGATOR = "feature_aggregator.conv_layers."
FNV_SEED = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def _fnv1a64_py(data):
    h = FNV_SEED
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


try:
    import numba

    @numba.njit(cache=False)
    def _fnv1a64_jit(data):
        h = np.uint64(FNV_SEED)
        prime = np.uint64(FNV_PRIME)
        for b in data:
            h = (h ^ np.uint64(b)) * prime
        return h

    def fnv1a64(data):
        return int(_fnv1a64_jit(np.frombuffer(bytes(data), dtype=np.uint8)))

except ImportError:
    fnv1a64 = _fnv1a64_py


def encode_archive(meta, tensors):
    out = bytearray(b"PFPL")

    def u32(v):
        out.extend(struct.pack("<I", v))

    def text(s):
        b = s.encode()
        u32(len(b))
        out.extend(b)

    u32(1)
    u32(len(meta))
    for k, v in meta.items():
        text(k)
        text(v)
    u32(len(tensors))
    for name, arr in tensors:
        text(name)
        u32(arr.ndim)
        out.extend(struct.pack("<" + "Q" * arr.ndim, *arr.shape))
        out.extend(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    out.extend(struct.pack("<Q", fnv1a64(out)))
    return bytes(out)


def model_args(ckpt):
    if ckpt.get("args") is not None:
        return vars(ckpt["args"])
    cfg = ckpt.get("cfg")
    if cfg is not None:
        model = cfg["model"] if "model" in cfg else cfg
        return dict(model)
    raise SystemExit("checkpoint has neither 'args' nor 'cfg'")


def layers(value):
    return ast.literal_eval(value) if isinstance(value, str) else list(value)


def convert(src, source_label=None):
    ckpt = torch.load(src, map_location="cpu", weights_only=False)
    args = model_args(ckpt)
    state = ckpt["model"]

    conv = layers(args["conv_feature_layers"])
    context = layers(args["conv_aggregator_layers"])
    if any(len(l) != 3 for l in conv) or any(len(l) != 3 or l[2] != 1 for l in context):
        raise SystemExit("unsupported layer table")
    if any(k.startswith("feature_aggregator.residual_proj") and state[k] is not None for k in state):
        raise SystemExit("context networks with channel-changing residual projections are not supported")

    meta = {
        "kind": "wav2vec",
        "conv_layers": ",".join(f"{c}x{k}x{s}" for c, k, s in conv),
        "context_layers": ",".join(f"{c}x{k}" for c, k, _ in context),
        "conv_skip": "1" if args.get("skip_connections_feat", False) else "0",
        "context_skip": "1" if args.get("skip_connections_agg", False) else "0",
        # fairseq stores the square of the factor it applies
        "residual_scale": repr(math.sqrt(float(args.get("residual_scale", 0.5)))),
        "log_compression": "1" if args.get("log_compression", False) else "0",
        "padding": "zero" if args.get("agg_zero_pad", False) else "replicate",
        "norm_eps": "1e-05",
        "source": source_label or pathlib.Path(src).name,
    }
    tensors = []
    for name, value in state.items():
        if not (name.startswith(EXTRACTOR) or name.startswith(AGGREGATOR)):
            continue
        tensors.append((name, value.detach().to(torch.float32).numpy()))
    if not tensors:
        raise SystemExit("no feature_extractor/feature_aggregator tensors found")
    return encode_archive(meta, tensors)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("checkpoint", help="fairseq wav2vec .pt file")
    p.add_argument("output", help="destination .pfpl archive")
    p.add_argument("--source", help="label stored in the archive (default: checkpoint file name)")
    a = p.parse_args(argv)
    blob = convert(a.checkpoint, a.source)
    out = pathlib.Path(a.output)
    tmp = out.with_suffix(out.suffix + ".tmp")
    tmp.write_bytes(blob)
    tmp.replace(out)
    print(f"wrote {out} ({len(blob)} bytes)", file=sys.stderr)


if __name__ == "__main__":
    main()
