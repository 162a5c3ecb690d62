import itertools
import json
from fractions import Fraction

import dimod
import numpy as np
import pytest

from modules.errors import ValidationError
from modules.hamiltonian import (MAX_DEGREE, PenaltyConfig, SpinPolynomial, build_backbone, build_contact,
                                 build_total, evaluate, load_hamiltonian)
from modules.lattice_model import (InteractionMatrix, Peptide, TurnSequence, decode_geometry, encode_geometry,
                                   feasible_bitstring, is_feasible_turns, is_self_avoiding, no_backtracking,
                                   qubit_layout, structural_energy, turns_to_positions)
from modules.postproc import is_consistent
from modules.refsolve import exact_enumerate
from tests.oracles import all_bitstrings


def test_evaluate_constant_and_linear():
    poly = SpinPolynomial(2, {(): 1.5, (0,): 2, (0, 1): -1})
    # s = 1 - 2b
    assert evaluate(poly, "00") == 1.5 + 2 - 1
    assert evaluate(poly, "10") == 1.5 - 2 + 1
    assert evaluate(poly, "11") == 1.5 - 2 - 1
    assert poly.degree == 2
    assert poly.degree_histogram() == {0: 1, 1: 1, 2: 1}


def test_polynomial_rejects_out_of_range_and_wrong_length():
    with pytest.raises(ValidationError):
        SpinPolynomial(2, {(2,): 1})
    with pytest.raises(ValidationError):
        SpinPolynomial(2, {(0,): 1}).evaluate("0")


def test_vectorised_energies_match_exact():
    rng = np.random.default_rng(5)
    terms = {}
    for _ in range(20):
        k = int(rng.integers(0, 4))
        qs = tuple(sorted(rng.choice(6, size=k, replace=False).tolist()))
        terms[qs] = Fraction(int(rng.integers(-8, 9)), 4)
    poly = SpinPolynomial(6, terms)
    strings = all_bitstrings(6)
    fast = poly.energies(strings)
    for b, e in zip(strings, fast):
        assert e == pytest.approx(float(poly.evaluate_exact(b)), abs=1e-12)


def test_flip_delta_and_restrict():
    poly = SpinPolynomial(3, {(0,): 1, (0, 1): Fraction(1, 2), (0, 1, 2): -2, (): 3})
    for b in all_bitstrings(3):
        for j in range(3):
            flipped = b[:j] + ("1" if b[j] == "0" else "0") + b[j + 1:]
            assert poly.flip_delta(b, j) == poly.evaluate_exact(flipped) - poly.evaluate_exact(b)
    fixed = poly.restrict({0: 1, 2: 0})
    for b1 in "01":
        assert fixed.evaluate_exact("0" + b1 + "0") == poly.evaluate_exact("1" + b1 + "0")


def test_json_round_trip(tmp_path, hp6):
    _peptide, _layout, h_f = hp6
    path = tmp_path / "h.json"
    path.write_text(h_f.to_json(), encoding="utf-8")
    assert load_hamiltonian(str(path)) == h_f
    data = json.loads(h_f.to_json())
    assert data["n_q"] == h_f.n_q
    with pytest.raises(ValidationError):
        SpinPolynomial.from_json("{not json")


def test_binary_polynomial_agrees(hp7):
    _peptide, _layout, h_f = hp7
    bp = h_f.to_binary_polynomial()
    assert bp.vartype is dimod.SPIN
    rng = np.random.default_rng(1)
    for _ in range(50):
        bits = "".join(str(b) for b in rng.integers(0, 2, size=h_f.n_q))
        spins = {j: 1 - 2 * int(c) for j, c in enumerate(bits)}
        assert bp.energy(spins) == pytest.approx(h_f.evaluate(bits), abs=1e-9)
    assert SpinPolynomial.from_binary_polynomial(bp, h_f.n_q) == h_f
    assert SpinPolynomial.from_binary_polynomial(bp.to_binary(), h_f.n_q) == h_f


def test_penalty_defaults(hp):
    assert PenaltyConfig.default_for(hp) == PenaltyConfig(10.0, 10.0, 10.0)
    zero = InteractionMatrix(np.zeros((20, 20)))
    assert PenaltyConfig.default_for(zero).lambda_back == 10.0
    with pytest.raises(ValidationError):
        PenaltyConfig(0.0, 1.0, 1.0)


def test_backbone_zero_on_non_backtracking_walks():
    n = 7
    layout = qubit_layout(n)
    poly = build_backbone(n, PenaltyConfig(10, 10, 10))
    assert poly.degree <= 4
    for geom in all_bitstrings(layout.n_geom):
        turns = decode_geometry(geom, n)
        t = tuple(turns)
        equal = sum(1 for k in range(len(t) - 1) if t[k] == t[k + 1])
        bits = geom + "0" * layout.n_contact
        assert poly.evaluate_exact(bits) == 10 * equal


def test_backbone_all_free_turns_equal_last_gauge_turn():
    n = 8
    layout = qubit_layout(n)
    turns = (0, 1, 0, 0, 0, 0, 0)
    bits = encode_geometry(turns) + "0" * layout.n_contact
    poly = build_backbone(n, PenaltyConfig(3, 1, 1))
    assert poly.evaluate(bits) == 3 * 4


def test_degree_bound(hp):
    for seq in ("HPPPPHH", "HPHPPHHPH", "HHPPHPPHHPPH"):
        poly = build_total(Peptide.from_string(seq), hp)
        assert poly.degree <= MAX_DEGREE


def test_contact_term_vanishes_when_contact_off(hp):
    peptide = Peptide.from_string("HPPPPH")
    layout = qubit_layout(peptide)
    poly = build_contact(peptide, hp, PenaltyConfig(10, 10, 10))
    for geom in all_bitstrings(layout.n_geom):
        assert poly.evaluate_exact(geom + "0") == 0


def test_feasible_energy_equals_structural_energy(hp):
    for seq in ("HPPPPHH", "HHPPPHH", "PHPPPHH"):
        peptide = Peptide.from_string(seq)
        layout = qubit_layout(peptide)
        h_f = build_total(peptide, hp)
        for geom in all_bitstrings(layout.n_geom):
            turns = decode_geometry(geom, peptide.n)
            if not is_feasible_turns(turns):
                continue
            bits = feasible_bitstring(turns, layout)
            expected = Fraction(structural_energy(turns_to_positions(turns), peptide, hp))
            assert h_f.evaluate_exact(bits) == expected


def test_penalties_dominate_inconsistent_contacts(hp):
    """非相邻却置 1 的接触比特至少带来 4λ 的净惩罚"""
    peptide = Peptide.from_string("HPHHPHHPH")
    layout = qubit_layout(peptide)
    h_f = build_total(peptide, hp)
    rng = np.random.default_rng(2)
    checked = 0
    for _ in range(400):
        geom = "".join(str(b) for b in rng.integers(0, 2, size=layout.n_geom))
        turns = decode_geometry(geom, peptide.n)
        if not is_feasible_turns(turns):
            continue
        consistent = feasible_bitstring(turns, layout)
        base = h_f.evaluate_exact(consistent)
        for q in range(layout.n_geom, layout.n_q):
            if consistent[q] == "1":
                continue
            flipped = consistent[:q] + "1" + consistent[q + 1:]
            assert h_f.evaluate_exact(flipped) - base >= 4 * 10 - 1
            checked += 1
    assert checked > 0


@pytest.mark.parametrize("seq", ["HPPH", "HPHPH", "HPPPPH", "HPPPPHH", "HHPPPHH", "HPHPHPH"])
def test_hilbert_space_minimum_equals_enumeration(seq, hp):
    peptide = Peptide.from_string(seq)
    h_f = build_total(peptide, hp)
    strings = all_bitstrings(h_f.n_q)
    brute = min(h_f.evaluate_exact(b) for b in strings)
    assert float(brute) == exact_enumerate(peptide, hp).e_ref


def test_backtracking_states_are_penalized(hp7):
    _peptide, layout, h_f = hp7
    for geom in all_bitstrings(layout.n_geom):
        turns = decode_geometry(geom, layout.n_residues)
        if no_backtracking(turns):
            continue
        bits = geom + "0" * layout.n_contact
        assert h_f.evaluate(bits) >= 10


@pytest.mark.parametrize("seq", ["HPPPPHH", "HHPPPHH"])
def test_inconsistent_states_lie_above_ground(seq, hp):
    peptide = Peptide.from_string(seq)
    layout = qubit_layout(peptide)
    h_f = build_total(peptide, hp)
    e_ref = Fraction(exact_enumerate(peptide, hp).e_ref)
    for bits in all_bitstrings(layout.n_q):
        if not is_consistent(bits, layout):
            assert h_f.evaluate_exact(bits) > e_ref


def test_overlap_is_seen_only_next_to_an_active_contact(hp):
    """第 2、8 个珠子重合（六元环）"""
    peptide = Peptide.from_string("HHPPPPHH")
    layout = qubit_layout(peptide)
    h_f = build_total(peptide, hp)
    turns = TurnSequence((0, 1, 0, 2, 1, 0, 2))
    conf = turns_to_positions(turns)
    assert no_backtracking(turns)
    assert not is_self_avoiding(conf)
    assert conf.positions[1] == conf.positions[7]

    geom = encode_geometry(turns)
    assert h_f.evaluate_exact(geom + "0" * layout.n_contact) == 0

    # (2, 7) 几何上相邻，失配项为零；相邻对 (2, 8) 重合，贡献 λ_overlap/2
    contacts = ["0"] * layout.n_contact
    contacts[layout.contact_qubit((2, 7)) - layout.n_geom] = "1"
    assert h_f.evaluate_exact(geom + "".join(contacts)) == Fraction(-1) + Fraction(10, 2)


@pytest.mark.slow
def test_overlap_dominance_does_not_reach_eleven_residues(hp):
    """远离激活接触的重叠不受罚：N=11 时重叠构象可以达到可行基态能量"""
    peptide = Peptide.from_string("HPHHPHHPHPH")
    layout = qubit_layout(peptide)
    h_f = build_total(peptide, hp)
    e_ref = exact_enumerate(peptide, hp).e_ref
    best = None
    for tail in itertools.product(range(4), repeat=peptide.n - 4):
        turns = TurnSequence((0, 1, 0) + tail)
        if not no_backtracking(turns) or is_self_avoiding(turns_to_positions(turns)):
            continue
        geom = encode_geometry(turns)
        restricted = h_f.restrict({q: int(b) for q, b in enumerate(geom)})
        # 固定几何后接触比特互不耦合，逐个取使能量最低的值
        contacts = "".join("1" if restricted.coefficient((q,)) > 0 else "0"
                           for q in range(layout.n_geom, layout.n_q))
        e = h_f.evaluate(geom + contacts)
        best = e if best is None else min(best, e)
    assert best is not None
    assert best <= e_ref
