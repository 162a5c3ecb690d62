import itertools
import os

import numpy as np
import pytest

from modules.errors import InfeasibleConformationError, ValidationError
from modules.experiment import BUNDLED_MATRIX
from modules.lattice_model import (TETRAHEDRAL_ROTATIONS, Conformation, InteractionMatrix, Peptide, TurnSequence,
                                   closed_form_contact_count, contact_pairs, contacts_from_geometry,
                                   decode_geometry, encode_geometry, feasible_bitstring, is_feasible_turns,
                                   is_self_avoiding, no_backtracking, qubit_layout, random_feasible_turns,
                                   rotate_turns, structural_energy, turns_to_positions)

TABLE_SEQUENCES = {
    "IDWKKLLDAAKQIL": (46, 21, 25),
    "RGKWTYNGITYEGR": (46, 21, 25),
    "KWKLFKKIGAVLKVL": (53, 23, 30),
    "LEPFSGKALCSWSIC": (53, 23, 30),
    "MRWQEMGYIFYPRKLR": (61, 25, 36),
    "VARGWKRKCPLFGKGG": (61, 25, 36),
}

# 六元环：珠子 1 与 6 相邻
RING_TURNS = (0, 1, 2, 0, 1)


@pytest.mark.parametrize("sequence, expected", TABLE_SEQUENCES.items())
def test_layout_matches_published_counts(sequence, expected):
    layout = qubit_layout(sequence)
    assert (layout.n_q, layout.n_geom, layout.n_contact) == expected


def test_contact_pairs():
    assert contact_pairs(5) == []
    assert contact_pairs(6) == [(1, 6)]
    assert contact_pairs(8) == [(1, 6), (1, 8), (2, 7), (3, 8)]
    assert len(contact_pairs(14)) == 25
    assert len(contact_pairs(16)) == 36


def test_contact_count_closed_form():
    for n in range(2, 31):
        assert len(contact_pairs(n)) == closed_form_contact_count(n)


def test_peptide_validation_reports_position():
    with pytest.raises(ValidationError) as err:
        Peptide.from_string("HPXPH")
    assert err.value.position == 3
    with pytest.raises(ValidationError):
        Peptide.from_string("HPH")


def test_turn_qubits():
    layout = qubit_layout(7)
    assert layout.turn_qubits(1) == (None, None)
    assert layout.turn_qubits(3) == (None, 0)
    assert layout.turn_qubits(4) == (1, 2)
    assert layout.turn_qubits(6) == (5, 6)
    assert layout.contact_qubit((1, 6)) == 7
    assert layout.contact_qubit((2, 7)) == 8
    assert layout.role(6) == "geometry" and layout.role(7) == "contact"


def test_decode_geometry():
    assert tuple(decode_geometry("0", 4)) == (0, 1, 0)
    assert tuple(decode_geometry("110", 5)) == (0, 1, 1, 2)
    assert len(decode_geometry("0" * 21, 14)) == 13
    with pytest.raises(ValidationError):
        decode_geometry("00", 4)


def test_geometry_encoding_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        n = int(rng.integers(4, 17))
        bits = "".join(str(b) for b in rng.integers(0, 2, size=2 * n - 7))
        assert encode_geometry(decode_geometry(bits, n)) == bits


def test_positions():
    assert turns_to_positions([0, 1]).positions == ((0, 0, 0), (1, 1, 1), (0, 2, 2))
    assert turns_to_positions([0, 0]).positions == ((0, 0, 0), (1, 1, 1), (0, 0, 0))
    assert turns_to_positions([0, 1, 2, 3]).positions[-1] == (0, 4, 0)


def test_backtracking_and_self_avoidance():
    assert not no_backtracking([0, 0])
    assert is_self_avoiding(turns_to_positions([0, 1, 2, 3]))
    for n in range(4, 20):
        straight = [k % 2 for k in range(n - 1)]
        assert is_feasible_turns(straight)
    for length in range(1, 4):
        for turns in itertools.product(range(4), repeat=length):
            if no_backtracking(turns):
                assert is_self_avoiding(turns_to_positions(turns))


def test_backtrack_returns_to_previous_bead():
    for a in range(4):
        for prefix in ([], [1], [2, 3]):
            if prefix and prefix[-1] == a:
                continue
            turns = prefix + [a, a]
            pos = turns_to_positions(turns).positions
            assert pos[-1] == pos[-3]


def test_ring_contact(hp):
    peptide = Peptide.from_string("HPPPPH")
    conf = turns_to_positions(RING_TURNS)
    assert is_self_avoiding(conf)
    assert structural_energy(conf, peptide, hp) == -1.0
    assert contacts_from_geometry(conf, qubit_layout(peptide)) == "1"


def test_structural_energy_rotation_invariant(hp):
    peptide = Peptide.from_string("HPPPPHHPH")
    rng = np.random.default_rng(3)
    turns = random_feasible_turns(rng, peptide.n)
    energy = structural_energy(turns_to_positions(turns), peptide, hp)
    assert len(TETRAHEDRAL_ROTATIONS) == 12
    for perm in TETRAHEDRAL_ROTATIONS:
        rotated = turns_to_positions(rotate_turns(turns, perm))
        assert structural_energy(rotated, peptide, hp) == energy


def test_structural_energy_rejects_overlap(hp):
    peptide = Peptide.from_string("HPPH")
    conf = turns_to_positions([0, 0, 1])
    with pytest.raises(InfeasibleConformationError):
        structural_energy(conf, peptide, hp)


def test_extended_chain_has_no_contacts(hp):
    peptide = Peptide.from_string("HHHHHHHHHH")
    layout = qubit_layout(peptide)
    conf = turns_to_positions([k % 2 for k in range(peptide.n - 1)])
    assert contacts_from_geometry(conf, layout) == "0" * layout.n_contact
    assert structural_energy(conf, peptide, hp) == 0.0


def test_contact_bits_agree_with_structural_energy(hp):
    peptide = Peptide.from_string("HPHPPHHPH")
    layout = qubit_layout(peptide)
    rng = np.random.default_rng(11)
    for _ in range(50):
        turns = random_feasible_turns(rng, peptide.n)
        conf = turns_to_positions(turns)
        contacts = contacts_from_geometry(conf, layout)
        expected = sum(hp.energy(peptide.residues[i - 1], peptide.residues[j - 1])
                       for (i, j), c in zip(layout.contact_pairs, contacts) if c == "1")
        assert structural_energy(conf, peptide, hp) == expected


def test_feasible_bitstring_layout():
    layout = qubit_layout(8)
    turns = TurnSequence((0, 1, 0, 1, 0, 1, 0))
    bits = feasible_bitstring(turns, layout)
    assert len(bits) == layout.n_q
    assert bits[layout.n_geom:] == "0" * layout.n_contact


def test_random_feasible_turns_respects_gauge():
    rng = np.random.default_rng(0)
    for _ in range(20):
        turns = random_feasible_turns(rng, 9)
        assert tuple(turns)[:3] == (0, 1, 0)
        assert is_feasible_turns(turns)


def test_interaction_matrix_file(tmp_path):
    letters = "ACDEFGHIKLMNPQRSTVWY"
    rows = [" ".join("-0.5" if (a == "H" and b == "P") or (a == "P" and b == "H") else "0" for b in letters)
            for a in letters]
    path = tmp_path / "m.txt"
    path.write_text(" ".join(letters) + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    m = InteractionMatrix.load(str(path))
    assert m.energy("H", "P") == -0.5 and m.energy("P", "H") == -0.5
    assert m.max_abs == 0.5

    first = rows[0].split()
    first[1] = "1"
    rows[0] = " ".join(first)
    path.write_text(" ".join(letters) + "\n" + "\n".join(rows) + "\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        InteractionMatrix.load(str(path))


def test_bundled_hp_matrix_matches_builtin():
    bundled = InteractionMatrix.load(BUNDLED_MATRIX)
    assert np.array_equal(bundled.eps, InteractionMatrix.hp().eps)
    assert bundled.name == "hp"


def test_matrix_name_follows_contents(tmp_path, monkeypatch, matrix_file):
    path = matrix_file("lookalike_hp.txt", np.full((20, 20), -1.0))
    monkeypatch.chdir(tmp_path)
    loaded = InteractionMatrix.load("lookalike_hp.txt")
    assert loaded.name != "hp"
    assert os.path.isabs(loaded.name)
    assert os.path.samefile(loaded.name, path)

    matrix_file("plain.txt", InteractionMatrix.hp().eps)
    assert InteractionMatrix.load("plain.txt").name == "hp"


def test_conformation_size():
    assert Conformation(((0, 0, 0), (1, 1, 1))).n == 2
