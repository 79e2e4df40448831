"""Build the seeded 10-class, 900-per-class GTSRB subset."""
import argparse

from tsrnet.gtsrb import SUBSET_CLASSES, make_subset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("src", help="directory-per-class training images (e.g. GTSRB/Final_Training/Images)")
    parser.add_argument("out", help="output directory")
    parser.add_argument("--classes", type=int, nargs="+", default=list(SUBSET_CLASSES))
    parser.add_argument("--per-class", type=int, default=900)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--copy", action="store_true", help="copy files instead of symlinking")
    args = parser.parse_args()
    n = make_subset(args.src, args.out, args.classes, args.per_class, args.seed, link=not args.copy)
    print(f"placed {n} images under {args.out}")


if __name__ == "__main__":
    main()
