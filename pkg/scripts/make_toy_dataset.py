"""Write the procedural toy dataset used by the smoke tests."""
import argparse

from tsrnet.toyset import write_toy_dataset


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", help="output directory")
    parser.add_argument("--classes", type=int, default=5)
    parser.add_argument("--per-class", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    root = write_toy_dataset(args.out, args.classes, args.per_class, args.seed)
    print(f"wrote {args.classes * args.per_class} images to {root}")


if __name__ == "__main__":
    main()
