from __future__ import annotations

import random
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bra.bif import (
    Bif,
    Circuit,
    Citation,
    Connection,
    Sign,
    Species,
    Transmitter,
    UniformCircuit,
    UnknownElementError,
    estimate_axon_count,
    roi_extract,
    uniform_leaves,
    validate_bif,
)
from oracles import inside, leaves, random_instance

REF = (Citation("k"),)


def u(cid, species=Species.RAT, sign=Sign.EXCITATORY, tx=Transmitter.GLUTAMATE):
    return UniformCircuit(cid, cid, species, sign, tx, 10, REF)


def rules(report):
    return sorted((f.element, f.rule, f.severity) for f in report)


def test_composite_input_is_an_error():
    bif = Bif.build("b", [u("a"), Circuit("g", "g", Species.RAT, frozenset({"a"}), REF)], [Connection("k", "g", "a", Species.RAT)])
    assert rules(validate_bif(bif)) == [("k", "input-not-uniform", "error")]


def test_empty_bif_has_empty_report():
    assert len(validate_bif(Bif("empty"))) == 0


def test_species_chimera_warning():
    bif = Bif.build(
        "b",
        [u("m", Species.MOUSE), u("h", Species.HUMAN)],
        [Connection("k", "m", "h", Species.UNKNOWN, Transmitter.GLUTAMATE, references=REF)],
    )
    assert rules(validate_bif(bif)) == [("k", "species-chimera", "warning")]


def test_dangling_member_and_cycle():
    bif = Bif.build(
        "b",
        [
            Circuit("x", "x", Species.RAT, frozenset({"y", "ghost"}), REF),
            Circuit("y", "y", Species.RAT, frozenset({"x"}), REF),
        ],
    )
    got = rules(validate_bif(bif))
    assert ("x", "dangling-member", "error") in got
    assert ("x", "membership-cycle", "error") in got and ("y", "membership-cycle", "error") in got


def test_cell_count_and_transmitter_sign_checks():
    bad = UniformCircuit("g", "g", Species.RAT, Sign.EXCITATORY, Transmitter.GABA, 0, REF)
    got = rules(validate_bif(Bif.build("b", [bad])))
    assert got == [("g", "cell-count-range", "error"), ("g", "sign-transmitter-mismatch", "warning")]


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError):
        Bif.build("b", [u("a"), u("a")])


def test_roi_identity():
    bif = Bif.build("b", [u("a"), u("b")], [Connection("k", "a", "b", Species.RAT)])
    view = roi_extract(bif, ["a", "b"])
    assert view.bif == bif and view.external == ()


def test_roi_chain():
    bif = Bif.build("b", [u("a"), u("b"), u("c")], [Connection("ab", "a", "b", Species.RAT), Connection("bc", "b", "c", Species.RAT)])
    view = roi_extract(bif, ["a", "b"])
    assert list(view.bif.connections) == ["ab"]
    assert [k.id for k in view.external] == ["bc"]
    assert [k.id for k in view.efferents] == ["bc"] and view.afferents == ()


def test_roi_unknown_id():
    with pytest.raises(UnknownElementError, match="nope"):
        roi_extract(Bif("b"), ["nope"])


def test_fig6_roi_boundary(fig6):
    view = roi_extract(fig6["bif"], fig6["roi"])
    efferent = {k.id for k in view.efferents}
    # output to the thalamic relay neurons and the dopaminergic projection to cortex
    assert "gpi_trn" in efferent and "snc_ctx" in efferent
    assert {k.id for k in view.afferents} == {"ctx_matrix", "ctx_striosome", "pptn_snc"}
    assert view.leaves == ("gpe", "gpi_snr", "snc", "stn", "str_matrix", "str_striosome")


def test_leaves():
    g = Circuit("g", "g", Species.RAT, frozenset({"u1", "n"}), REF)
    n = Circuit("n", "n", Species.RAT, frozenset({"u2", "u3"}), REF)
    o = Circuit("o", "o", Species.RAT, frozenset({"u2", "n"}), REF)
    bif = Bif.build("b", [u("u1"), u("u2"), u("u3"), g, n, o])
    assert uniform_leaves(bif, "u1") == ("u1",)
    assert uniform_leaves(bif, "g") == ("u1", "u2", "u3")
    assert uniform_leaves(bif, "o") == ("u2", "u3")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_leaves_match_traversal(seed):
    bif, roi, _ = random_instance(random.Random(seed))
    for cid in bif.circuits:
        assert set(uniform_leaves(bif, cid)) == leaves(bif, cid)
    view = roi_extract(bif, roi)
    assert set(view.bif.circuits) == inside(bif, roi)
    # every connection is internal, boundary or wholly outside, never two of these
    internal, external = set(view.bif.connections), {k.id for k in view.external}
    assert not internal & external
    ins = inside(bif, roi)
    for k in bif.connections.values():
        crossing = (k.input in ins) != (k.output in ins)
        assert (k.id in external) == crossing
        assert (k.id in internal) == (k.input in ins and k.output in ins)


def test_axon_count_examples():
    assert estimate_axon_count(0.0, 1000) == 0
    assert estimate_axon_count(1.0, 1000) == 1000
    assert estimate_axon_count(0.25, 999) == 250


@pytest.mark.parametrize("ratio", [-0.1, 1.5])
def test_axon_count_range(ratio):
    with pytest.raises(ValueError):
        estimate_axon_count(ratio, 10)


@given(st.fractions(min_value=0, max_value=1, max_denominator=1000), st.integers(0, 10**7))
def test_axon_count_matches_decimal_rounding(ratio, n):
    want = (Decimal(ratio.numerator) * n / Decimal(ratio.denominator)).quantize(Decimal(1), ROUND_HALF_UP)
    assert estimate_axon_count(Fraction(ratio), n) == int(want)
    assert 0 <= estimate_axon_count(Fraction(ratio), n) <= n
