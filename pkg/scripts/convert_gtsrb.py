"""Regroup the flat GTSRB test archive into one directory per class.

The training archive needs no conversion: point ``--data-root`` at
``GTSRB/Final_Training/Images``.
"""
import argparse
from pathlib import Path

from tsrnet.gtsrb import convert_test_archive


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("images", help="GTSRB/Final_Test/Images")
    parser.add_argument("out", help="output directory")
    parser.add_argument("--labels", help="GT-final_test.csv (default: inside the images directory)")
    parser.add_argument("--copy", action="store_true", help="copy files instead of symlinking")
    args = parser.parse_args()
    labels = args.labels or Path(args.images) / "GT-final_test.csv"
    n = convert_test_archive(args.images, labels, args.out, link=not args.copy)
    print(f"placed {n} images under {args.out}")


if __name__ == "__main__":
    main()
