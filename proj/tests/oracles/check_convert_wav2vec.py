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

"""Round trip for tools/scripts/convert_wav2vec.py.

Usage: check_convert_wav2vec.py <pfpl binary> <convert_wav2vec.py>

Builds a small fairseq-style checkpoint, converts it, runs
`pfpl export-features` on it and compares against a torch forward pass
written from the fairseq module layout.
"""

import argparse
import csv
import importlib.util
import math
import pathlib
import subprocess
import sys
import tempfile

import numpy as np
import torch
import torch.nn.functional as F
from scipy.io import wavfile

DATA = pathlib.Path(__file__).parents[1] / "data"
CONV = [(512, 10, 5), (512, 8, 4), (512, 4, 2)]
AGG = [(512, 2, 1), (512, 3, 1)]


def fake_checkpoint(path, rng):
    state = {}
    n_in = 1
    for i, (c, k, _) in enumerate(CONV):
        p = f"feature_extractor.conv_layers.{i}."
        state[p + "0.weight"] = torch.tensor(rng.normal(0, 1 / math.sqrt(n_in * k), (c, n_in, k)), dtype=torch.float32)
        state[p + "2.weight"] = torch.tensor(1 + 0.1 * rng.normal(size=c), dtype=torch.float32)
        state[p + "2.bias"] = torch.tensor(0.1 * rng.normal(size=c), dtype=torch.float32)
        n_in = c
    for i, (c, k, _) in enumerate(AGG):
        p = f"feature_aggregator.conv_layers.{i}."
        state[p + "1.weight"] = torch.tensor(rng.normal(0, 1 / math.sqrt(n_in * k), (c, n_in, k)), dtype=torch.float32)
        state[p + "1.bias"] = torch.tensor(0.1 * rng.normal(size=c), dtype=torch.float32)
        state[p + "3.weight"] = torch.tensor(1 + 0.1 * rng.normal(size=c), dtype=torch.float32)
        state[p + "3.bias"] = torch.tensor(0.1 * rng.normal(size=c), dtype=torch.float32)
        n_in = c
    state["wav2vec_predictions.project_to_steps.weight"] = torch.zeros(512, 512, 1, 12)
    args = argparse.Namespace(
        conv_feature_layers=repr(CONV),
        conv_aggregator_layers=repr(AGG),
        skip_connections_feat=True,
        skip_connections_agg=True,
        residual_scale=0.5,
        log_compression=True,
        agg_zero_pad=False,
    )
    torch.save({"args": args, "model": state}, path)
    return state


def fairseq_forward(state, wave):
    scale = math.sqrt(0.5)
    x = torch.tensor(wave, dtype=torch.float64).view(1, 1, -1)
    for i, (_, _, s) in enumerate(CONV):
        p = f"feature_extractor.conv_layers.{i}."
        residual = x
        x = F.conv1d(x, state[p + "0.weight"].double(), stride=s)
        x = F.relu(F.group_norm(x, 1, state[p + "2.weight"].double(), state[p + "2.bias"].double(), 1e-5))
        if x.size(1) == residual.size(1):
            tsz, r_tsz = x.size(2), residual.size(2)
            residual = residual[..., :: r_tsz // tsz][..., :tsz]
            x = (x + residual) * scale
    x = torch.log(x.abs() + 1)
    for i, (_, k, _) in enumerate(AGG):
        p = f"feature_aggregator.conv_layers.{i}."
        residual = x
        y = F.pad(x, (k - 1, 0), mode="replicate")
        y = F.conv1d(y, state[p + "1.weight"].double(), state[p + "1.bias"].double())
        y = F.relu(F.group_norm(y, 1, state[p + "3.weight"].double(), state[p + "3.bias"].double(), 1e-5))
        x = (y + residual) * scale
    return x[0].T.numpy()


def main():
    pfpl, converter = sys.argv[1], sys.argv[2]
    spec = importlib.util.spec_from_file_location("convert_wav2vec", converter)
    conv = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(conv)

    rng = np.random.default_rng(3)
    _, wave = wavfile.read(DATA / "speech_a.wav")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        state = fake_checkpoint(tmp / "w2v.pt", rng)
        conv.main([str(tmp / "w2v.pt"), str(tmp / "w2v.pfpl")])
        subprocess.run(
            [pfpl, "export-features", "--encoder-ckpt", str(tmp / "w2v.pfpl"), "--in", str(DATA / "speech_a.wav"),
             "--csv", str(tmp / "f.csv")],
            check=True,
        )
        with open(tmp / "f.csv") as f:
            rows = list(csv.reader(f))[1:]
    got = np.array([[float(v) for v in r[3:]] for r in rows])
    want = fairseq_forward(state, wave.astype(np.float64))
    assert got.shape == want.shape, (got.shape, want.shape)
    err = float(np.max(np.abs(got - want)) / max(1.0, float(np.max(np.abs(want)))))
    print(f"frames={got.shape[0]} channels={got.shape[1]} max scaled error={err:.3e}")
    if err > 1e-9:
        sys.exit(1)


if __name__ == "__main__":
    main()
