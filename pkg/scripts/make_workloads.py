"""Regenerate the shipped workload fixtures.

Layer attributes come from the standard ImageNet definitions (224x224 input,
8-bit weights and activations). Only conv and fc layers are emitted; pooling
and batch-norm fold into their neighbours. Skip connections become extra
successor edges into the layer that consumes the sum/concatenation.

    python scripts/make_workloads.py [outdir]
"""

import json
import sys
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "chipletdse" / "data" / "workloads"

BITS = 8
POST_RELU_SPARSITY = 0.6


class Net:
    def __init__(self, name):
        self.name = name
        self.layers = []
        self.index = {}

    def add(self, lid, cin, cout, k, hw_out, inputs, groups=1):
        lid = f"{self.name}.{lid}"
        params = k * k * (cin // groups) * cout
        macs = params * hw_out * hw_out
        rec = {
            "id": lid,
            "weight_kb": round(params * BITS / 8 / 1024, 4),
            "macs": macs,
            "activations_out_bits": cout * hw_out * hw_out * BITS,
            "sparsity": 1.0 if not self.layers else POST_RELU_SPARSITY,
            "successors": [],
        }
        self.layers.append(rec)
        self.index[lid] = rec
        for src in inputs:
            self.index[src]["successors"].append(lid)
        return lid

    def fc(self, lid, cin, cout, inputs):
        return self.add(lid, cin, cout, 1, 1, inputs)

    def params(self):
        return sum(l["weight_kb"] for l in self.layers) * 1024 * 8 / BITS

    def to_dict(self):
        return {"name": self.name, "layers": self.layers}


def resnet(name, blocks, bottleneck):
    net = Net(name)
    cur = net.add("conv1", 3, 64, 7, 112, [])
    hw, cin = 56, 64
    widths = [64, 128, 256, 512]
    for stage, (n, w) in enumerate(zip(blocks, widths)):
        for b in range(n):
            stride = 2 if (b == 0 and stage > 0) else 1
            hw_out = hw // stride
            tag = f"s{stage + 1}.b{b}"
            cout = w * 4 if bottleneck else w
            if bottleneck:
                x = net.add(f"{tag}.c1", cin, w, 1, hw, [cur])
                x = net.add(f"{tag}.c2", w, w, 3, hw_out, [x])
                last_in, last_k, last_c = w, 1, cout
            else:
                x = net.add(f"{tag}.c1", cin, w, 3, hw_out, [cur])
                last_in, last_k, last_c = w, 3, cout
            skip = cur
            if stride != 1 or cin != cout:
                skip = net.add(f"{tag}.ds", cin, cout, 1, hw_out, [cur])
            cur = net.add(f"{tag}.c{3 if bottleneck else 2}", last_in, last_c, last_k, hw_out, [x, skip])
            hw, cin = hw_out, cout
    net.fc("fc", cin, 1000, [cur])
    return net


def vgg(name, cfg):
    net = Net(name)
    cur, cin, hw, i = None, 3, 224, 0
    for v in cfg:
        if v == "M":
            hw //= 2
            continue
        i += 1
        cur = net.add(f"conv{i}", cin, v, 3, hw, [cur] if cur else [])
        cin = v
    cur = net.fc("fc6", cin * 7 * 7, 4096, [cur])
    cur = net.fc("fc7", 4096, 4096, [cur])
    net.fc("fc8", 4096, 1000, [cur])
    return net


def mobilenet_v2(name="mobilenetv2"):
    net = Net(name)
    cur = net.add("stem", 3, 32, 3, 112, [])
    cin, hw = 32, 112
    cfg = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2),
           (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]
    blk = 0
    for t, c, n, s in cfg:
        for j in range(n):
            stride = s if j == 0 else 1
            hw_out = hw // stride
            hidden = cin * t
            tag = f"ir{blk}"
            x = cur
            if t != 1:
                x = net.add(f"{tag}.exp", cin, hidden, 1, hw, [x])
            x = net.add(f"{tag}.dw", hidden, hidden, 3, hw_out, [x], groups=hidden)
            inputs = [x, cur] if (stride == 1 and cin == c) else [x]
            cur = net.add(f"{tag}.proj", hidden, c, 1, hw_out, inputs)
            cin, hw = c, hw_out
            blk += 1
    cur = net.add("head", cin, 1280, 1, hw, [cur])
    net.fc("fc", 1280, 1000, [cur])
    return net


def densenet(name, blocks, growth=32, bn_size=4, init=64):
    net = Net(name)
    stem = net.add("conv0", 3, init, 7, 112, [])
    feats = [stem]
    cin, hw = init, 56
    for bi, n in enumerate(blocks):
        for li in range(n):
            tag = f"d{bi + 1}.l{li}"
            x = net.add(f"{tag}.c1", cin, bn_size * growth, 1, hw, feats)
            y = net.add(f"{tag}.c2", bn_size * growth, growth, 3, hw, [x])
            feats = feats + [y]
            cin += growth
        if bi != len(blocks) - 1:
            hw //= 2
            t = net.add(f"t{bi + 1}", cin, cin // 2, 1, hw, feats)
            cin //= 2
            feats = [t]
    net.fc("fc", cin, 1000, feats)
    return net


VGG16 = [64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M", 512, 512, 512, "M"]
VGG19 = [64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M",
         512, 512, 512, 512, "M", 512, 512, 512, 512, "M"]

MODELS = {
    "resnet18": lambda: resnet("resnet18", [2, 2, 2, 2], False),
    "resnet34": lambda: resnet("resnet34", [3, 4, 6, 3], False),
    "resnet152": lambda: resnet("resnet152", [3, 8, 36, 3], True),
    "vgg16": lambda: vgg("vgg16", VGG16),
    "vgg19": lambda: vgg("vgg19", VGG19),
    "mobilenetv2": mobilenet_v2,
    "densenet169": lambda: densenet("densenet169", [6, 12, 32, 32]),
}

# published parameter totals (millions), carried as metadata only
WORKLOADS = {
    "wl1": (["resnet18", "resnet34", "resnet152"], 177),
    "wl2": (["resnet34", "vgg16", "resnet18"], 171),
    "wl3": (["resnet34", "vgg19"], 166),
    "wl4": (["vgg19", "mobilenetv2", "densenet169"], 161),
}


def synthetic_small():
    return {
        "name": "synthetic_small",
        "dnns": [{"name": "toy", "layers": [
            {"id": "toy.l0", "weight_kb": 100.0, "macs": 2.0e9, "activations_out_bits": 4.0e5,
             "sparsity": 1.0, "successors": ["toy.l1", "toy.l2"]},
            {"id": "toy.l1", "weight_kb": 250.0, "macs": 1.0e9, "activations_out_bits": 2.0e5,
             "sparsity": 0.5, "successors": ["toy.l2"]},
            {"id": "toy.l2", "weight_kb": 60.0, "macs": 5.0e8, "activations_out_bits": 8.0e3,
             "sparsity": 0.8, "successors": []},
        ]}],
    }


def tiny():
    return {
        "name": "tiny",
        "dnns": [{"name": "tiny", "layers": [
            {"id": "t.l0", "weight_kb": 150.0, "macs": 3.0e9, "activations_out_bits": 6.4e6,
             "sparsity": 1.0},
            {"id": "t.l1", "weight_kb": 90.0, "macs": 1.2e9, "activations_out_bits": 3.2e6,
             "sparsity": 0.6},
            {"id": "t.l2", "weight_kb": 40.0, "macs": 2.0e8, "activations_out_bits": 1.6e4,
             "sparsity": 0.6},
        ]}],
    }


def main(out=OUT):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for wl, (models, total) in WORKLOADS.items():
        nets = [MODELS[m]() for m in models]
        doc = {"name": wl.upper(), "total_params_m": total, "dnns": [n.to_dict() for n in nets]}
        (out / f"{wl}.json").write_text(json.dumps(doc, indent=1) + "\n")
        print(wl, [f"{n.name}:{n.params() / 1e6:.2f}M/{len(n.layers)}L" for n in nets])
    (out / "wl_synthetic_small.json").write_text(json.dumps(synthetic_small(), indent=1) + "\n")
    (out / "wl_tiny.json").write_text(json.dumps(tiny(), indent=1) + "\n")


if __name__ == "__main__":
    main(*sys.argv[1:])
