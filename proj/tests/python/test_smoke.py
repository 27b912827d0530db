import math

import pytest

import ilmlab


def test_collapse():
    assert ilmlab.collapse([0, 0, 2, 1, 1, 2, 1], 2) == [0, 1, 1]


def test_worked_grid():
    grid = ilmlab.PosteriorGrid(2, [[0.5, 0.3, 0.2], [0.1, 0.6, 0.3]])
    assert math.exp(ilmlab.ctc_log_prob(grid, [0, 1])) == pytest.approx(0.30)
    assert math.exp(ilmlab.prefix_log_prob(grid, [0])) == pytest.approx(0.52)
    row = ilmlab.label_posterior_row(grid, [])
    assert row == pytest.approx([0.52, 0.42, 0.06])
    with pytest.raises(ilmlab.DeadPrefixError):
        ilmlab.label_posterior_row(grid, [0, 0])


def test_world_pipeline():
    world = ilmlab.build_world(2, 2, 3, 3, seed=7)
    data = ilmlab.sample_dataset(world, 50, 11)
    assert len(data) == 50
    prior = ilmlab.estimate_frame_prior(data, world)
    assert sum(prior.probs) == pytest.approx(1.0)
    unigram = ilmlab.unigram_from_prior(prior)
    assert not unigram.models_eos

    model, trace, diverged, epochs = ilmlab.train(
        ilmlab.CtxLM(2, 1), data, world, criterion="label", epochs=5
    )
    assert not diverged
    assert epochs == 5
    assert trace[-1] <= trace[0]

    best, score = ilmlab.decode_fused(
        world.grid(0), elm=None, ilm=unigram, lambda2=0.2, beam=0
    )
    assert math.isfinite(score)
    assert all(0 <= a < 2 for a in best)


def test_exact_ilm_matches_enumeration():
    world = ilmlab.build_world(2, 2, 3, 3, seed=5)
    joint = ilmlab.enumerate_joint(world)
    total = sum(p.weight for p in joint)
    assert total == pytest.approx(1.0)
    row = ilmlab.exact_ilm_posterior(world, [])
    assert sum(row) == pytest.approx(1.0)


def test_json_round_trip():
    world = ilmlab.build_world(2, 2, 3, 3, seed=9)
    again = ilmlab.World.from_json(world.to_json())
    assert again.to_json() == world.to_json()


def test_validation_error_maps_to_value_error():
    with pytest.raises(ValueError):
        ilmlab.build_world(0, 2, 3, 3)
