"""Regression catalog of joint ergodicity cases, shared by several tests."""
from glerg.glf import X, Floor, Linear
from glerg.number_field import SymReal, standard_basis
from glerg.systems import GlSeq, cyclic_shift, torus_rotation, toral_automorphism

B = standard_basis()
S2, S3, S6 = B.gen("sqrt2"), B.gen("sqrt3"), B.gen("sqrt6")
CAT = [[2, 1], [1, 1]]


def fl(a):
    return Floor(Linear(SymReal.of(a), SymReal(0)))


def lin(c):
    return Linear(SymReal(c), SymReal(0))


def cases():
    """(name, system, sequences, expected decision)."""
    rot = torus_rotation({"T": S2})
    pair = torus_rotation({"T1": S2, "T2": S3}, name="pair")
    cat = toral_automorphism(CAT, {"T": 1}, name="cat")
    flip = cyclic_shift(2, {"T": 1}, name="flip")
    return [
        ("rotation (T^n, T^2n)", rot, [GlSeq([("T", X)]), GlSeq([("T", lin(2))])], "NotJointlyErgodic"),
        ("pair shared floor(sqrt2 n)", pair, [GlSeq([("T1", fl(S2))]), GlSeq([("T2", fl(S2))])],
         "NotJointlyErgodic"),
        ("pair shared floor(sqrt6 n)", pair, [GlSeq([("T1", fl(S6))]), GlSeq([("T2", fl(S6))])],
         "JointlyErgodic"),
        ("cat (T^floor(sqrt2 n), T^floor(sqrt3 n))", cat,
         [GlSeq([("T", fl(S2))]), GlSeq([("T", fl(S3))])], "JointlyErgodic"),
        ("flip (T^n, T^n)", flip, [GlSeq([("T", X)]), GlSeq([("T", X)])], "NotJointlyErgodic"),
        ("flip (T^n, T^2n)", flip, [GlSeq([("T", X)]), GlSeq([("T", lin(2))])], "NotJointlyErgodic"),
        ("flip (T^n, T^floor(sqrt2 n))", flip, [GlSeq([("T", X)]), GlSeq([("T", fl(S2))])],
         "JointlyErgodic"),
    ]
