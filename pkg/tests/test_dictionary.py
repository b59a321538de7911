import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import unit_gaussian
from sparsead.dictionary import (Dictionary, TrainConfig, equal_blocks, export_csv, ksvd_train,
                                 load_dictionary, normalize_atoms, save_dictionary)
from sparsead.errors import DimensionError, FormatError, MissingDataError


def test_rank_one_data_learns_the_direction():
    v = np.array([1.0, -2.0, 0.5, 3.0, 0.0, 1.5])
    Y = np.tile(v, (12, 1))
    D, hist = ksvd_train(Y, TrainConfig(atom_count=1, sparsity=1, sweeps=5, blocks=None), return_history=True)
    d = D.atoms[:, 0]
    assert np.allclose(np.abs(d @ v) / np.linalg.norm(v), 1.0, atol=1e-12)
    assert hist[-1] <= 1e-12


def test_identity_data_gives_signed_permutation():
    Y = np.eye(4)
    D, hist = ksvd_train(Y, TrainConfig(atom_count=4, sparsity=1, sweeps=5, blocks=None), return_history=True)
    assert hist[-1] <= 1e-9
    P = np.abs(D.atoms)
    assert np.allclose(np.sort(P, axis=0)[-1], 1.0, atol=1e-9)
    assert sorted(np.argmax(P, axis=0)) == [0, 1, 2, 3]
    # each e_i is exactly one atom up to sign
    for i in range(4):
        assert np.isclose(np.max(np.abs(D.atoms.T @ Y[i])), 1.0, atol=1e-9)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_ksvd_error_is_monotone(seed):
    rng = np.random.default_rng(seed)
    Y = rng.standard_normal((100, 20))
    cfg = TrainConfig(atom_count=32, sparsity=3, sweeps=8, seed=seed)
    D, hist = ksvd_train(Y, cfg, return_history=True)
    assert all(b <= a + cfg.tol for a, b in zip(hist, hist[1:]))
    assert D.is_normalized()
    assert D.m == 32 and D.p == 20


def test_ksvd_is_deterministic():
    Y = np.random.default_rng(4).standard_normal((60, 12))
    cfg = TrainConfig(atom_count=20, sparsity=2, sweeps=3, seed=9)
    assert ksvd_train(Y, cfg) == ksvd_train(Y, cfg)


def test_fewer_rows_than_atoms():
    Y = np.random.default_rng(5).standard_normal((6, 10))
    D = ksvd_train(Y, TrainConfig(atom_count=15, sparsity=2, sweeps=2, blocks=3))
    assert D.m == 15 and D.is_normalized()
    assert D.blocks == ((0, 5), (5, 5), (10, 5))


def test_training_errors():
    with pytest.raises(MissingDataError, match="no training data"):
        ksvd_train(np.empty((0, 5)), TrainConfig(atom_count=2, sparsity=1))
    with pytest.raises(DimensionError):
        ksvd_train(np.ones(5), TrainConfig(atom_count=2, sparsity=1))
    with pytest.raises(ValueError):
        ksvd_train(np.ones((4, 3)), TrainConfig(atom_count=2, sparsity=3))
    init = Dictionary(np.eye(4))
    with pytest.raises(DimensionError):
        ksvd_train(np.ones((4, 3)), TrainConfig(atom_count=4, sparsity=1), init=init)


def test_normalize_atoms():
    A = np.zeros((5, 2))
    A[:2, 0] = (3.0, 4.0)
    A[:, 1] = 1.0
    D = normalize_atoms(A)
    assert np.allclose(D.atoms[:, 0], [0.6, 0.8, 0, 0, 0])
    assert D.is_normalized()


def test_normalize_is_idempotent(rng):
    D = Dictionary(unit_gaussian(rng, 6, 9))
    assert normalize_atoms(D) == D


def test_zero_column_replacement_is_seeded(caplog):
    A = np.eye(4)[:, :3].copy()
    A[:, 1] = 0
    first = normalize_atoms(A, seed=7)
    assert "replaced 1 zero atom" in caplog.text
    assert first == normalize_atoms(A, seed=7)
    assert first.is_normalized()
    assert not np.array_equal(first.atoms, normalize_atoms(A, seed=8).atoms)


def test_blocks_validation():
    with pytest.raises(DimensionError):
        Dictionary(np.eye(4), blocks=((0, 2), (1, 2)))
    with pytest.raises(DimensionError):
        Dictionary(np.eye(4), blocks=((0, 2),))
    assert equal_blocks(10, 3) == ((0, 4), (4, 3), (7, 3))
    with pytest.raises(ValueError):
        equal_blocks(3, 4)


def test_atoms_are_read_only(rng):
    D = Dictionary(unit_gaussian(rng, 3, 4))
    with pytest.raises(ValueError):
        D.atoms[0, 0] = 1.0


@settings(max_examples=25, deadline=None)
@given(p=st.integers(1, 8), m=st.integers(1, 12), nb=st.integers(0, 4), seed=st.integers(0, 2**32 - 1))
def test_roundtrip(tmp_path_factory, p, m, nb, seed):
    rng = np.random.default_rng(seed)
    blocks = equal_blocks(m, min(nb, m)) if nb else None
    D = Dictionary(rng.standard_normal((p, m)), blocks)
    path = tmp_path_factory.mktemp("d") / "x.dict"
    save_dictionary(D, path)
    back = load_dictionary(path)
    assert back == D
    assert back.atoms.tobytes() == D.atoms.tobytes()


def test_roundtrip_preserves_large_blocks(tmp_path, rng):
    D = Dictionary(unit_gaussian(rng, 5, 1000), blocks=((0, 500), (500, 500)))
    save_dictionary(D, tmp_path / "d")
    assert load_dictionary(tmp_path / "d").blocks == ((0, 500), (500, 500))


def test_corrupted_files(tmp_path, rng):
    D = Dictionary(unit_gaussian(rng, 4, 6))
    path = tmp_path / "d"
    save_dictionary(D, path)
    raw = bytearray(path.read_bytes())

    bad = raw.copy()
    bad[0:2] = b"XX"
    path.write_bytes(bytes(bad))
    with pytest.raises(FormatError, match="bad magic") as exc:
        load_dictionary(path)
    assert exc.value.code == "bad_magic"

    bad = raw.copy()
    bad[40] ^= 0xFF
    path.write_bytes(bytes(bad))
    with pytest.raises(FormatError) as exc:
        load_dictionary(path)
    assert exc.value.code == "checksum"

    path.write_bytes(bytes(raw[:-9]))
    with pytest.raises(FormatError) as exc:
        load_dictionary(path)
    assert exc.value.code == "dimension_mismatch"

    path.write_bytes(bytes(raw[:12]))
    with pytest.raises(FormatError) as exc:
        load_dictionary(path)
    assert exc.value.code == "bad_header"


def test_csv_export(tmp_path, rng):
    D = Dictionary(unit_gaussian(rng, 3, 5))
    export_csv(D, tmp_path / "d.csv")
    back = np.loadtxt(tmp_path / "d.csv", delimiter=",")
    assert back.shape == (5, 3)
    assert np.array_equal(back.T, D.atoms)
