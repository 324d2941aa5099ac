#!/usr/bin/env python3
# Copyright 2026 The cxnet Authors
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

"""Convert Keras DenseNet-121 weights (HDF5) into a cxnet tensor archive.

Works for the Keras ImageNet weight files and for CheXNet-style files saved
from a full Keras model. Only backbone layers are kept unless --all is given.

    python3 convert_keras_weights.py densenet121_weights_tf_dim_ordering_tf_kernels_notop.h5 \
        $CXNET_WEIGHTS_DIR/densenet121_imagenet.cxa
"""

import argparse
import hashlib
import json
import struct
import sys

import h5py
import numpy as np

MAGIC = b"CXNETARC"
VERSION = 1
HEAD_LAYERS = {"fc_hidden", "predictions", "dropout"}


def layer_groups(f):
    root = f["model_weights"] if "model_weights" in f else f
    names = root.attrs.get("layer_names")
    if names is None:
        names = list(root.keys())
    for name in names:
        name = name.decode() if isinstance(name, bytes) else name
        yield name, root[name]


def weights_of(group):
    names = group.attrs.get("weight_names", [])
    for w in names:
        w = w.decode() if isinstance(w, bytes) else w
        yield w, np.asarray(group[w])


def to_cxnet(name, value):
    """Keras weight name and array -> archive name and array."""
    key = name.split(":")[0]
    # Nested model files prefix weight names with the model name.
    for prefix in ("densenet121/", "model/"):
        if key.startswith(prefix):
            key = key[len(prefix):]
    if key.endswith("/kernel"):
        if value.ndim == 4:  # (kh, kw, in, out) -> (out, in, kh, kw)
            value = value.transpose(3, 2, 0, 1)
        elif value.ndim == 2:  # (in, out) -> (out, in)
            value = value.T
    return key, np.ascontiguousarray(value, dtype="<f8")


def write_archive(path, tensors, meta):
    names = sorted(tensors)
    payload = b"".join(tensors[n].tobytes() for n in names)
    index, offset = [], 0
    for n in names:
        index.append({"name": n, "shape": list(tensors[n].shape), "offset": offset})
        offset += tensors[n].size
    header = json.dumps(
        {"meta": meta, "payload_sha256": hashlib.sha256(payload).hexdigest(), "tensors": index},
        separators=(",", ":"),
    ).encode()
    with open(path, "wb") as out:
        out.write(MAGIC)
        out.write(struct.pack("<IQ", VERSION, len(header)))
        out.write(header)
        out.write(payload)


def main(argv):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("h5")
    ap.add_argument("output")
    ap.add_argument("--all", action="store_true", help="keep head layers too")
    args = ap.parse_args(argv)

    tensors = {}
    with h5py.File(args.h5, "r") as f:
        for layer, group in layer_groups(f):
            if not args.all and layer in HEAD_LAYERS:
                continue
            for w, value in weights_of(group):
                key, arr = to_cxnet(w, value)
                tensors[key] = arr
    if not tensors:
        sys.exit("no weights found in " + args.h5)
    with open(args.h5, "rb") as f:
        source_sha = hashlib.sha256(f.read()).hexdigest()
    write_archive(args.output, tensors, {"source": args.h5, "source_sha256": source_sha, "format": "keras-densenet"})
    print(f"{len(tensors)} tensors -> {args.output}")


if __name__ == "__main__":
    main(sys.argv[1:])
