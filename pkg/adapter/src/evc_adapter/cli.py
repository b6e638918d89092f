"""evc-extract: turn media files into EVCF feature files.

    evc-extract --media clip.gif --modality video --fps 1 \
        --encoder patch-mean-v1 --out clip.evcf

    evc-extract --media take.wav --modality audio --hop 5 \
        --encoder spectral-mean-v1 --out take.evcf

Several --media flags with a directory --out process a batch; --jobs
parallelizes across files (extraction is per-file, so order and bytes
do not depend on the worker count).
"""

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .encoders import available_encoders
from .errors import AdapterError
from .extract import ExtractionSpec, extract_features

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def build_parser():
    p = _Parser(prog="evc-extract", description=__doc__.split("\n")[0])
    p.add_argument("--media", action="append", required=True,
                   help="input media file; repeat for a batch")
    p.add_argument("--modality", required=True, choices=["video", "audio"])
    p.add_argument("--fps", type=float,
                   help="frame sampling rate in Hz (video)")
    p.add_argument("--hop", type=float,
                   help="hop rate in Hz (audio)")
    p.add_argument("--encoder", required=True,
                   help="encoder tag, one of: " + ", ".join(available_encoders()))
    p.add_argument("--out", required=True,
                   help="output .evcf path, or a directory for batches")
    p.add_argument("--pooling", default="mean")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers for batches")
    return p


def _rate_from(args, parser):
    if args.modality == "video":
        if args.hop is not None:
            parser.error("--hop does not apply to video, use --fps")
        if args.fps is None:
            parser.error("--fps is required for video")
        return args.fps
    if args.fps is not None:
        parser.error("--fps does not apply to audio, use --hop")
    if args.hop is None:
        parser.error("--hop is required for audio")
    return args.hop


def _out_path(out, media, batch):
    if not batch and not os.path.isdir(out):
        return out
    stem = os.path.splitext(os.path.basename(media))[0]
    return os.path.join(out, stem + ".evcf")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    rate = _rate_from(args, parser)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    batch = len(args.media) > 1
    if batch and not os.path.isdir(args.out):
        parser.error("--out must be an existing directory for a batch")

    def one(media):
        spec = ExtractionSpec(media=media, modality=args.modality,
                              encoder=args.encoder, rate_hz=rate,
                              pooling=args.pooling)
        dest = _out_path(args.out, media, batch)
        shape = extract_features(spec, dest)
        return media, dest, shape

    try:
        if args.jobs == 1 or not batch:
            results = [one(m) for m in args.media]
        else:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                results = list(pool.map(one, args.media))
    except AdapterError as exc:
        print(f"evc-extract: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"evc-extract: {exc}", file=sys.stderr)
        return 2

    for media, dest, (l_f, d_f) in results:
        print(f"{media} -> {dest} ({l_f} frames x {d_f} dims)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
