"""Run both certificate pipelines on a random bounded instance.

Usage: python demos/certify_random.py [--n 3] [--p 1] [--seed 0]
"""

import argparse

from qprelax import (build_face_data, certify_rlt, certify_sdp,
                     random_bounded_instance, validate_assumption1)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--extra", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    inst = random_bounded_instance(args.n, args.extra, args.p, args.seed)
    print(inst.name)
    rlt = certify_rlt(inst)
    print(rlt.to_text())
    face = build_face_data(inst, validate_assumption1(inst).slater_point)
    sdp = certify_sdp(inst, face)
    print(sdp.to_text())
    if rlt.passed and sdp.passed:
        print(f"\nlower bounds: R {rlt.value:.8f} <= SR {sdp.value:.8f}")


if __name__ == "__main__":
    main()
