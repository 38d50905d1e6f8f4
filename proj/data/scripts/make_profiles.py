# Copyright 2026 The spotsim Authors. All Rights Reserved.
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
# ==============================================================================
"""Writes the shipped performance profiles into data/profiles/.

Each row gives the end-to-end latency l(P, M, B) at S_in=512, S_out=128.
A fifth of it is charged to the initial phase and the rest is spread over
the decode steps.
"""

import json
import os

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "profiles")

BATCHES = (1, 2, 4, 8)


def exec_table(rows):
  table = {}
  for (p, m), lats in sorted(rows.items()):
    for b, l in zip(BATCHES, lats):
      table["%d,%d,%d" % (p, m, b)] = {"t_init": 0.2 * l, "t_dec": 0.8 * l / 128}
  return table


def profile(name, layers, total_bytes, kv, rows, **extra):
  doc = {
      "model": {
          "name": name,
          "num_layers": layers,
          "bytes_per_layer": total_bytes / layers,
          "kv_bytes_per_token_per_layer": kv,
      },
      "gpus_per_instance": 4,
      "init_reference_s_in": 512,
      "pipeline_efficiency": 0.5,
      "bandwidth": 1.5e9,
      "transfer_latency": 0.01,
      "restart_load_time": 10.0,
      "restart_ratios": {"local_disk": 1.45, "remote_storage": 9.54},
      "allow_nearest": False,
      "min_gpus_without_memopt": 0,
      "prices": {"spot": 1.9, "ondemand": 3.9},
      "exec": exec_table(rows),
  }
  doc.update(extra)
  return doc


PROFILES = {
    "gpt20b.json": profile(
        "GPT-20B", 44, 74.5e9, 24576,
        {
            (3, 4): (14.373, 15.0, 17.5, 23.0),
            (2, 8): (10.0, 12.0, 13.5, 24.0),
            (4, 4): (17.0, 18.5, 20.5, 26.0),
        },
        min_gpus_without_memopt=16),
    "opt6.7b.json": profile(
        "OPT-6.7B", 32, 25.0e9, 16384,
        {
            (1, 4): (5.447, 6.2, 7.1, 9.8),
            (2, 4): (6.9, 7.6, 8.4, 11.2),
        }),
    "llama30b.json": profile(
        "LLaMA-30B", 60, 111.8e9, 26624,
        {
            (2, 8): (17.540, 19.1, 21.6, 29.5),
            (4, 4): (21.2, 22.9, 25.4, 33.0),
        },
        min_gpus_without_memopt=16),
}


def main():
  os.makedirs(OUT, exist_ok=True)
  for fname, doc in PROFILES.items():
    with open(os.path.join(OUT, fname), "w") as f:
      json.dump(doc, f, indent=2, sort_keys=True)
      f.write("\n")


if __name__ == "__main__":
  main()
