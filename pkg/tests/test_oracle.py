import numpy as np
import pytest

from qcausal import generator, oracle, tensor
from qcausal.channels import identity_choi
from qcausal.errors import ContractViolation, LayoutError
from qcausal.oracle import CpMapCJ, default_map, prepare_measure_cj, probability
from qcausal.process import ProcessMatrix, make_layout


KET0 = np.diag([1.0, 0.0])
KET1 = np.diag([0.0, 1.0])


def test_default_maps_give_probability_one():
    for seed in range(3):
        w = generator.markovian_process(generator.random_dag_spec(3, seed=seed), seed=seed).process
        assert probability(w, {}) == pytest.approx(1.0, abs=1e-9)


def test_single_state_born_rule():
    rho = generator.random_density(2, seed=3)
    w = ProcessMatrix(make_layout(("A", 2, [2])), np.kron(rho, np.eye(2)))
    p = probability(w, {"A": prepare_measure_cj("A", KET0, KET1)})
    assert p == pytest.approx(rho[0, 0].real, abs=1e-12)


def test_identity_channel_prepare_and_measure():
    w = generator.identity_channel_process(("A", "B"))
    p = probability(w, {"A": prepare_measure_cj("A", np.eye(2), KET1),
                        "B": prepare_measure_cj("B", KET1, np.eye(2) / 2)})
    assert p == pytest.approx(1.0, abs=1e-12)


def test_complex_preparation_uses_transpose():
    # prepare |+i>, measure |+i><+i| through an identity channel: must be certain
    v = np.array([1, 1j]) / np.sqrt(2)
    plus_i = np.outer(v, v.conj())
    w = generator.identity_channel_process(("A", "B"))
    p = probability(w, {"A": prepare_measure_cj("A", np.eye(2), plus_i),
                        "B": prepare_measure_cj("B", plus_i, np.eye(2) / 2)})
    assert p == pytest.approx(1.0, abs=1e-12)


def test_prepare_measure_examples():
    m = prepare_measure_cj("A", np.eye(2), np.eye(2) / 2)
    assert np.allclose(m.matrix, default_map(make_layout(("A", 2, [2])), "A").matrix)
    rank1 = prepare_measure_cj("A", KET0, KET0)
    assert np.linalg.matrix_rank(rank1.matrix) == 1
    assert np.trace(rank1.matrix) == pytest.approx(1.0)


def test_instrument_completeness():
    layout = make_layout(("A", 3, [2]))
    total = sum(cp.matrix for cp in oracle.measure_prepare_instrument(layout, "A"))
    # sum is the transposed Choi of a channel: Tr_out = 1_in
    marg = tensor.partial_trace(total.T, [3, 2], [1])
    assert tensor.max_abs_diff(marg, np.eye(3)) <= 1e-12


def test_prepare_measure_rejects_non_psd():
    with pytest.raises(ContractViolation):
        prepare_measure_cj("A", -np.eye(2), np.eye(2) / 2)


def test_probability_dimension_mismatch():
    w = generator.identity_channel_process(("A", "B"))
    with pytest.raises(LayoutError):
        probability(w, {"A": CpMapCJ("A", np.eye(9))})
    with pytest.raises(LayoutError):
        probability(w, {"Z": CpMapCJ("Z", np.eye(4))})


def test_probability_is_affine(rng):
    w = generator.markovian_process(generator.random_dag_spec(2, seed=1), seed=1).process
    name = w.layout.names[0]
    p = w.layout.party(name)
    a = prepare_measure_cj(name, KET0, generator.random_density(p.output_dim, seed=1))
    b = prepare_measure_cj(name, KET1, generator.random_density(p.output_dim, seed=2))
    t = 0.3
    mix = CpMapCJ(name, t * a.matrix + (1 - t) * b.matrix)
    lhs = probability(w, {name: mix})
    rhs = t * probability(w, {name: a}) + (1 - t) * probability(w, {name: b})
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_signaling_identity_channel():
    w = generator.identity_channel_process(("A", "B"))
    assert oracle.signaling_strength(w, "A", "B") == pytest.approx(1.0, abs=1e-9)
    assert oracle.signaling_strength(w, "B", "A") <= 1e-9


def test_signaling_product_process():
    ra, rb = generator.random_density(2, seed=1), generator.random_density(2, seed=2)
    w = ProcessMatrix(make_layout(("A", 2, [2]), ("B", 2, [2])),
                      np.kron(np.kron(np.kron(ra, np.eye(2)), rb), np.eye(2)))
    assert oracle.signaling_strength(w, "A", "B") <= 1e-9
    assert oracle.signaling_strength(w, "B", "A") <= 1e-9


def test_signaling_needs_distinct_parties():
    with pytest.raises(ContractViolation):
        oracle.signaling_strength(generator.identity_channel_process(), "A", "A")


def test_signaling_through_intermediate_party():
    # A -> B -> C with identity channels: B's default map breaks the chain
    layout = make_layout(("A", 2, [2]), ("B", 2, [2]), ("C", 2, [2]))
    spec = generator.make_dag(layout, [(("A", 0), "B"), (("B", 0), "C")])
    w = generator.markovian_process(spec, channels={"B": identity_choi(2),
                                                    "C": identity_choi(2)}, seed=0).process
    assert oracle.signaling_strength(w, "A", "B") == pytest.approx(1.0, abs=1e-9)
    assert oracle.signaling_strength(w, "A", "C") <= 1e-9
    assert oracle.signaling_strength(w, "C", "A") <= 1e-9
