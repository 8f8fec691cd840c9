"""Writes FBAG files the way the Python feature exporter does."""
import struct
import sys
from pathlib import Path


def write_fbag(path, slide_id, patch_size, coords, dim):
    sid = slide_id.encode("utf-8")
    out = bytearray()
    out += b"FBAG"
    out += struct.pack("<I", 1)
    out += struct.pack("<I", len(sid))
    out += sid
    out += struct.pack("<III", len(coords), dim, patch_size)
    for x, y in coords:
        out += struct.pack("<ii", x, y)
    for i in range(len(coords)):
        out += struct.pack("<%df" % dim, *[(i * dim + j) * 0.001 - 0.5 for j in range(dim)])
    Path(path).write_bytes(bytes(out))


def main():
    out_dir = Path(sys.argv[1])
    out_dir.mkdir(parents=True, exist_ok=True)
    # ResNet-50 style: 224 px patches on a 448x448 tissue region, 1024-dim.
    write_fbag(out_dir / "resnet.fbag", "slide_resnet", 224,
               [(0, 0), (224, 0), (0, 224), (224, 224)], 1024)
    # CTransPath style: a single 256 px patch, 768-dim.
    write_fbag(out_dir / "ctp.fbag", "slide_ctp", 256, [(0, 0)], 768)


if __name__ == "__main__":
    main()
