"""Compare the compiled and pure-Python CRC kernels, alone and inside the frame codec.

    python3 benchmarks/bench_kernels.py [--frames N] [--repeat R]
"""

from __future__ import annotations

import argparse
import random
import timeit

from wpansim import _kernels, frames, kernels
from wpansim.enums import FrameType
from wpansim.frames import ShortAddress, decode_frame, encode_frame, make_frame


def corpus(n: int, seed: int = 1) -> list[bytes]:
    rng = random.Random(seed)
    return [rng.randbytes(rng.randint(5, 125)) for _ in range(n)]


def codec_frames(n: int, seed: int = 2) -> list:
    rng = random.Random(seed)
    out = []
    for i in range(n):
        dst, src = ShortAddress(rng.randrange(0xFFFE)), ShortAddress(rng.randrange(0xFFFE))
        out.append(make_frame(FrameType.DATA, i & 0xFF, dst_pan=0x1234, dst=dst, src_pan=0x1234, src=src,
                              payload=rng.randbytes(rng.randint(0, 116))))
    return out


def best(stmt, repeat: int) -> float:
    return min(timeit.repeat(stmt, number=1, repeat=repeat))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    data = corpus(args.frames)
    octets = sum(map(len, data))
    backends = {"python": _kernels.crc16}
    if kernels.BACKEND == "cython":
        backends["cython"] = kernels.crc16
    else:
        print("compiled extension not available; timing the pure-Python kernel only")

    for name, fn in backends.items():
        assert [fn(d) for d in data[:100]] == [_kernels.crc16(d) for d in data[:100]]

    print(f"crc16 over {len(data)} buffers ({octets} octets), best of {args.repeat}")
    times = {}
    for name, fn in backends.items():
        t = best(lambda: [fn(d) for d in data], args.repeat)
        times[name] = t
        print(f"  {name:7s} {t * 1e3:9.2f} ms  {octets / t / 1e6:8.2f} MB/s")
    if len(times) == 2:
        print(f"  speedup {times['python'] / times['cython']:.1f}x")

    sample = codec_frames(args.frames)
    wires = [encode_frame(f) for f in sample]
    print(f"\nencode+decode of {len(sample)} data frames, best of {args.repeat}")
    original = frames.crc16
    try:
        for name, fn in backends.items():
            frames.crc16 = fn
            t = best(lambda: [decode_frame(encode_frame(f)) for f in sample], args.repeat)
            print(f"  {name:7s} {t * 1e3:9.2f} ms  {len(sample) / t:10.0f} frames/s")
    finally:
        frames.crc16 = original
    assert [decode_frame(w) for w in wires] == sample


if __name__ == "__main__":
    main()
