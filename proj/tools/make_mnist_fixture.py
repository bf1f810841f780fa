"""Builds the small MNIST IDX fixture used by the MNIST tests.

Reads the digit JSON files shipped in the `mnist` npm package (MIT licence,
data from the original MNIST set) and writes the first N images of the
requested digits as IDX files, then packs them into a .tar.gz.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_fixture.py package/src/digits tests/data/mnist_012.tar.gz
"""

import argparse
import io
import json
import struct
import tarfile
from pathlib import Path


def idx_images(images, rows, cols):
    out = bytearray(struct.pack(">IIII", 0x803, len(images), rows, cols))
    for img in images:
        out.extend(img)
    return bytes(out)


def idx_labels(labels):
    return struct.pack(">II", 0x801, len(labels)) + bytes(labels)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir", type=Path)
    ap.add_argument("output", type=Path)
    ap.add_argument("--digits", default="0,1,2")
    ap.add_argument("--per-digit", type=int, default=1000)
    args = ap.parse_args()

    images, labels = [], []
    for d in (int(x) for x in args.digits.split(",")):
        raw = json.loads((args.digits_dir / f"{d}.json").read_text())["data"]
        count = min(len(raw) // 784, args.per_digit)
        for i in range(count):
            px = raw[i * 784:(i + 1) * 784]
            images.append(bytes(min(255, max(0, round(v * 255))) for v in px))
            labels.append(d)

    files = {
        "mnist-images.idx3-ubyte": idx_images(images, 28, 28),
        "mnist-labels.idx1-ubyte": idx_labels(labels),
    }
    args.output.parent.mkdir(parents=True, exist_ok=True)
    with tarfile.open(args.output, "w:gz") as tar:
        for name, payload in files.items():
            info = tarfile.TarInfo(name)
            info.size = len(payload)
            info.mtime = 0
            tar.addfile(info, io.BytesIO(payload))
    print(f"{len(images)} images written to {args.output}")


if __name__ == "__main__":
    main()
