import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resnet_rs.scaling import ScaleConfig
from resnet_rs.schedules import (
    RegConfig,
    SchedulePlan,
    build_plan,
    ema_update,
    enet_rs_magnitude,
    grid_reg_policy,
    label_smooth,
    lr_at,
    peak_lr_for_batch,
    recipe_presets,
    recommend_weight_decay,
    reg_policy,
    stochastic_depth_survival,
)

PLAN = SchedulePlan(total_steps=1000, warmup_steps=100, peak_lr=1.6)


class TestLrSchedule:
    def test_cosine_endpoints(self):
        assert lr_at(0, PLAN) == 0.0
        assert lr_at(100, PLAN) == pytest.approx(1.6, abs=1e-15)
        assert lr_at(1000, PLAN) == pytest.approx(0.0, abs=1e-15)

    def test_cosine_midpoint_is_half_peak(self):
        assert lr_at(550, PLAN) == pytest.approx(0.8, abs=1e-12)

    def test_warmup_is_linear(self):
        assert lr_at(25, PLAN) == pytest.approx(0.4)
        assert lr_at(50, PLAN) == pytest.approx(0.8)

    def test_continuity_at_warmup_boundary(self):
        ramp_end = PLAN.peak_lr * PLAN.warmup_steps / PLAN.warmup_steps
        cosine_start = PLAN.peak_lr * 0.5 * (1 + math.cos(0.0))
        assert abs(ramp_end - cosine_start) < 1e-12
        assert abs(lr_at(PLAN.warmup_steps, PLAN) - PLAN.peak_lr) < 1e-12

    def test_non_increasing_after_warmup(self):
        values = [lr_at(s, PLAN) for s in range(100, 1001)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_riemann_sum_of_cosine(self):
        total = sum(lr_at(s, PLAN) for s in range(101, 1001))
        expected = 0.5 * PLAN.peak_lr * (PLAN.total_steps - PLAN.warmup_steps)
        assert abs(total - expected) <= PLAN.peak_lr

    def test_step_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            lr_at(-1, PLAN)
        with pytest.raises(ValueError):
            lr_at(1001, PLAN)

    def test_stepwise_milestones(self):
        plan = SchedulePlan(total_steps=900, warmup_steps=0, peak_lr=0.4,
                            decay="stepwise", milestones=(300, 600, 800),
                            factors=(0.1, 0.1, 0.1))
        assert lr_at(299, plan) == pytest.approx(0.4)
        assert lr_at(300, plan) == pytest.approx(0.04)
        assert lr_at(700, plan) == pytest.approx(0.004)
        assert lr_at(900, plan) == pytest.approx(0.0004)

    def test_plan_invariants(self):
        with pytest.raises(ValueError):
            SchedulePlan(total_steps=10, warmup_steps=10, peak_lr=0.1)
        with pytest.raises(ValueError):
            SchedulePlan(total_steps=10, warmup_steps=0, peak_lr=0.0)

    def test_build_plan_stepwise_baseline(self):
        plan = build_plan(90, 100, 256, decay="stepwise", warmup_epochs=0)
        assert plan.milestones == (3000, 6000, 8000)
        assert plan.factors == (0.1, 0.1, 0.1)

    def test_peak_lr_modes(self):
        assert peak_lr_for_batch(1024, "inverse") == pytest.approx(0.1 / 1024)
        assert peak_lr_for_batch(1024, "linear") == pytest.approx(0.4)
        with pytest.raises(ValueError):
            peak_lr_for_batch(1024, "mystery")

    def test_build_plan_rejects_bad_warmup(self):
        with pytest.raises(ValueError):
            build_plan(5, 100, 256, warmup_epochs=5)
        with pytest.raises(ValueError):
            build_plan(0, 100, 256)


class TestEmaUpdate:
    def test_fixed_point(self):
        assert ema_update(0.5, 0.5, 0.9999) == 0.5

    def test_small_step_toward_current(self):
        assert ema_update(0.0, 1.0, 0.9999) == pytest.approx(1e-4)

    def test_zero_decay_tracks_current(self):
        assert ema_update(3.0, 7.0, 0.0) == 7.0

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(0, 1))
    @settings(max_examples=100, deadline=None)
    def test_contraction(self, shadow, current, decay):
        updated = ema_update(shadow, current, decay)
        assert abs(updated - current) == pytest.approx(
            decay * abs(shadow - current), rel=1e-9, abs=1e-8
        )


class TestLabelSmooth:
    def test_thousand_classes(self):
        dist = label_smooth(3, 1000, 0.1)
        assert dist[3] == pytest.approx(0.9001)
        assert dist[0] == pytest.approx(0.0001)

    def test_zero_epsilon_is_one_hot(self):
        assert label_smooth(2, 5, 0.0) == [0.0, 0.0, 1.0, 0.0, 0.0]

    @given(st.integers(2, 5000), st.floats(0, 0.999), st.data())
    @settings(max_examples=100, deadline=None)
    def test_sums_to_one(self, num_classes, epsilon, data):
        index = data.draw(st.integers(0, num_classes - 1))
        dist = label_smooth(index, num_classes, epsilon)
        assert abs(sum(dist) - 1.0) < 1e-12
        assert all(v >= 0 for v in dist)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            label_smooth(5, 5, 0.1)
        with pytest.raises(ValueError):
            label_smooth(0, 5, 1.0)


class TestStochasticDepth:
    def test_no_drop(self):
        assert all(
            stochastic_depth_survival(i, 10, 0.0) == 1.0 for i in range(1, 11)
        )

    def test_last_block_survival(self):
        assert stochastic_depth_survival(10, 10, 0.1) == pytest.approx(0.9)

    def test_mid_block_survival(self):
        assert stochastic_depth_survival(5, 10, 0.1) == pytest.approx(0.95)

    def test_non_increasing_in_depth(self):
        values = [stochastic_depth_survival(i, 33, 0.2) for i in range(1, 34)]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_index_bounds(self):
        with pytest.raises(ValueError):
            stochastic_depth_survival(0, 10, 0.1)
        with pytest.raises(ValueError):
            stochastic_depth_survival(11, 10, 0.1)


# (depth, resolution) -> (magnitude, stochastic depth, dropout)
RS_POLICY_ROWS = {
    (50, 160): (10, 0.0, 0.25),
    (101, 160): (10, 0.0, 0.25),
    (101, 192): (15, 0.0, 0.25),
    (152, 192): (15, 0.0, 0.25),
    (152, 224): (15, 0.0, 0.25),
    (152, 256): (15, 0.0, 0.25),
    (200, 256): (15, 0.1, 0.25),
    (270, 256): (15, 0.1, 0.25),
    (350, 256): (15, 0.1, 0.25),
    (350, 320): (15, 0.1, 0.4),
    (420, 320): (15, 0.1, 0.4),
}


class TestRegPolicy:
    @pytest.mark.parametrize("key,expected", sorted(RS_POLICY_ROWS.items()))
    def test_published_rows(self, key, expected):
        config = reg_policy(*key)
        assert config.randaugment_magnitude == expected[0]
        assert config.stochastic_depth_rate == expected[1]
        assert config.dropout_rate == expected[2]
        # shared across the family
        assert config.randaugment_layers == 2
        assert config.label_smoothing == 0.1
        assert config.weight_decay == 4e-5
        assert config.ema_decay == 0.9999
        assert config.epochs == 350

    def test_unknown_pair_lists_valid_ones(self):
        with pytest.raises(ValueError) as err:
            reg_policy(50, 224)
        assert "50@160" in str(err.value)

    def test_row_count(self):
        assert len(RS_POLICY_ROWS) == 11


class TestGridRegPolicy:
    def test_width_one_low_resolution(self):
        reg = grid_reg_policy(ScaleConfig(101, 1.0, 128), 350)
        assert reg.randaugment_magnitude == 10
        assert reg.stochastic_depth_rate == 0.0
        assert reg.dropout_rate == 0.25

    def test_wide_high_resolution(self):
        reg = grid_reg_policy(ScaleConfig(200, 2.0, 448), 350)
        assert reg.randaugment_magnitude == 20
        assert reg.stochastic_depth_rate == 0.2
        assert reg.dropout_rate == 0.75

    def test_mid_resolution_band(self):
        reg = grid_reg_policy(ScaleConfig(101, 1.0, 224), 350)
        assert reg.randaugment_magnitude == 15
        assert reg.stochastic_depth_rate == 0.2

    def test_narrow_width_wins_over_resolution(self):
        reg = grid_reg_policy(ScaleConfig(101, 0.5, 448), 350)
        assert reg.randaugment_magnitude == 10

    def test_no_stochastic_depth_at_quarter_width(self):
        reg = grid_reg_policy(ScaleConfig(101, 0.25, 320), 350)
        assert reg.stochastic_depth_rate == 0.0

    @pytest.mark.parametrize("epochs", [10, 100])
    def test_short_runs_turn_regularizers_off(self, epochs):
        reg = grid_reg_policy(ScaleConfig(101, 1.5, 224), epochs)
        assert reg.randaugment_layers == 0
        assert reg.randaugment_magnitude == 0
        assert reg.stochastic_depth_rate == 0.0
        assert reg.dropout_rate == 0.0
        assert reg.label_smoothing == 0.0
        assert reg.weight_decay == 4e-5

    def test_dropout_follows_width_map(self):
        expected = {0.25: 0.0, 0.5: 0.1, 1.0: 0.25, 1.5: 0.6, 2.0: 0.75}
        for width, dropout in expected.items():
            reg = grid_reg_policy(ScaleConfig(101, width, 160), 350)
            assert reg.dropout_rate == dropout

    def test_rejects_off_grid_values(self):
        with pytest.raises(ValueError):
            grid_reg_policy(ScaleConfig(101, 0.75, 224), 350)
        with pytest.raises(ValueError):
            grid_reg_policy(ScaleConfig(101, 1.0, 224), 90)


class TestWeightDecayRule:
    # regularizer combinations studied at both decay values, with the winner
    WINNERS = [
        (set(), 1e-4),
        ({"RA", "LS"}, 1e-4),
        ({"RA", "LS", "DO"}, 4e-5),
        ({"RA", "LS", "SD", "DO"}, 4e-5),
    ]

    @pytest.mark.parametrize("active,winner", WINNERS)
    def test_matches_winning_column(self, active, winner):
        assert recommend_weight_decay(active) == winner

    def test_unknown_regularizer_rejected(self):
        with pytest.raises(ValueError):
            recommend_weight_decay({"RA", "MIXUP"})


class TestEnetRsMagnitude:
    @pytest.mark.parametrize("resolution,magnitude", [
        (64, 10), (224, 10), (225, 15), (300, 15), (320, 15), (321, 20),
        (456, 20), (600, 20),
    ])
    def test_bands(self, resolution, magnitude):
        assert enet_rs_magnitude(resolution) == magnitude

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            enet_rs_magnitude(0)


class TestRecipePresets:
    def test_legacy_resnet(self):
        preset = recipe_presets()["resnet-2015"]
        assert preset.epochs == 90
        assert preset.lr_decay == "stepwise"
        assert preset.optimizer == "momentum"
        assert preset.weight_decay == 1e-4
        assert preset.ema_decay == 0.0
        assert preset.randaugment_layers == 0
        assert not preset.squeeze_excitation and not preset.resnet_d_stem

    def test_resnet_rs_enables_everything(self):
        preset = recipe_presets()["resnet-rs"]
        assert preset.epochs == 350
        assert preset.lr_decay == "cosine"
        assert preset.optimizer == "momentum"
        assert preset.weight_decay == 4e-5
        assert preset.ema_decay == 0.9999
        assert preset.label_smoothing == 0.1
        assert preset.randaugment_layers == 2
        assert preset.dropout_rate > 0
        assert preset.stochastic_depth_rate > 0
        assert preset.squeeze_excitation and preset.resnet_d_stem

    def test_efficientnet_style(self):
        preset = recipe_presets()["efficientnet"]
        assert preset.epochs == 350
        assert preset.lr_decay == "exponential"
        assert preset.optimizer == "rmsprop"

    def test_ladder_has_ten_increments(self):
        presets = recipe_presets()
        rungs = sorted(k for k in presets if k.startswith("ladder-"))
        assert len(rungs) == 11  # baseline + 10 additions
        assert rungs[0] == "ladder-00-baseline"
        assert presets[rungs[0]] == presets["resnet-2015"]

    def test_ladder_order_and_cumulative_changes(self):
        presets = recipe_presets()
        rungs = sorted(k for k in presets if k.startswith("ladder-"))
        assert rungs[1].endswith("cosine-lr-decay")
        assert presets[rungs[1]].lr_decay == "cosine"
        assert presets[rungs[1]].epochs == 90
        assert presets[rungs[2]].epochs == 350
        wd_rung = next(k for k in rungs if k.endswith("decrease-weight-decay"))
        assert presets[wd_rung].weight_decay == 4e-5
        before_wd = rungs[rungs.index(wd_rung) - 1]
        assert presets[before_wd].weight_decay == 1e-4
        last = presets[rungs[-1]]
        assert last.squeeze_excitation and last.resnet_d_stem

    def test_reg_config_invariants_hold_for_every_row(self):
        for depth, resolution in RS_POLICY_ROWS:
            assert isinstance(reg_policy(depth, resolution), RegConfig)
        for width in (0.25, 0.5, 1.0, 1.5, 2.0):
            for resolution in (128, 160, 224, 320, 448):
                for epochs in (10, 100, 350):
                    reg = grid_reg_policy(ScaleConfig(50, width, resolution), epochs)
                    assert isinstance(reg, RegConfig)
