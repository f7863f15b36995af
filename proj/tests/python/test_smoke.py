import math
import os
from pathlib import Path

import pytest

import evtrust

SOURCE_DIR = Path(os.environ.get("EVTRUST_SOURCE_DIR", Path(__file__).resolve().parents[2]))
CONFIGS = SOURCE_DIR / "configs"

SMALL = """
dataset: {kind: synthetic, num_classes: 4, dim: 6, samples_per_class: 60}
partition: {mode: dirichlet, concentration: 0.5, min_per_node: 15}
topology: {kind: ring, nodes: 5}
aggregator: {kind: evidential_trust}
training: {rounds: 3, local_epochs: 2, learning_rate: 0.2}
model: {hidden: [16]}
master_seed: 11
"""


def test_special_functions():
    assert evtrust.digamma(1.0) == pytest.approx(-0.5772156649015329, rel=1e-14)
    assert evtrust.log_gamma(1.0) == 0.0
    assert evtrust.trigamma(1.0) == pytest.approx(math.pi**2 / 6, rel=1e-13)
    with pytest.raises(evtrust.DomainError):
        evtrust.digamma(0.0)


def test_dirichlet_summary():
    out = evtrust.summarize_dirichlet([2.0, 2.0, 2.0, 2.0])
    assert out["vacuity"] == 0.5
    assert out["entropy"] == pytest.approx(math.log(4))
    assert evtrust.vacuity([1.0, 3.0]) == 0.5
    assert evtrust.kl_dirichlet_to_uniform([1.0, 1.0, 1.0]) == 0.0
    assert evtrust.kl_dirichlet_to_uniform([2.0, 1.0]) == pytest.approx(math.log(2) - 0.5)
    assert evtrust.anneal_lambda(5, 20, 1.0) == 0.5


def test_zero_model_forward():
    params = evtrust.MlpParams.zeros([3, 8, 5])
    out = evtrust.forward(params, [0.3, -1.0, 2.0])
    assert out["vacuity"] == 0.5
    assert out["entropy"] == pytest.approx(math.log(5))
    assert evtrust.MlpParams.random_init([3, 8, 5], 1) == evtrust.MlpParams.random_init([3, 8, 5], 1)


def test_trust_and_threshold():
    p = evtrust.TrustParams()
    p.accuracy_weight = 0.0
    p.uncertainty_threshold = 0.9
    assert evtrust.trust_score(0.4, 0.0, p) == pytest.approx(0.6)
    assert evtrust.adaptive_threshold(0, 10, evtrust.TrustParams()) == pytest.approx(0.15)
    p.self_weight = 1.5
    with pytest.raises(evtrust.ValidationError):
        p.validate()


def test_topologies_and_partitions():
    assert evtrust.ring(4) == [[1, 3], [0, 2], [1, 3], [0, 2]]
    assert all(len(n) == 5 for n in evtrust.fully_connected(6))
    assert all(len(n) == 4 for n in evtrust.k_regular(10, 4, 3))
    data = evtrust.synth_blobs(6, 6, 50, 3.0, 1.0, 1)
    assert len(data) == 300
    parts = evtrust.partition_dirichlet(data, 8, 0.5, 5, 2)
    assert sorted(i for p in parts for i in p) == list(range(300))


def test_run_experiment_is_deterministic():
    a = evtrust.run_text(SMALL)
    b = evtrust.run_experiment(evtrust.parse_config(SMALL), threads=3)
    assert a.metrics_records() == b.metrics_records()
    assert len(evtrust.metrics(a)) == 3
    assert evtrust.summary(a)["final"]["mean_acc"] == a.final_mean_accuracy
    assert evtrust.rounds_to_peak(a.mean_accuracy_history) == a.rounds_to_peak
    assert evtrust.degradation(a, a) == 0.0


def test_config_round_trip_and_errors():
    config = evtrust.load_config(str(CONFIGS / "two_cluster_trust.yaml"))
    assert evtrust.parse_config(config.to_yaml()) == config
    assert config.override("aggregator.self_weight", "0.7") != config
    with pytest.raises(evtrust.ValidationError, match="aggregator.self_weight"):
        config.override("aggregator.self_weight", "1.5")
    with pytest.raises(evtrust.IoError):
        evtrust.load_config("/nonexistent.yaml")
