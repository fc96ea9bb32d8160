import numpy as np
import pytest

from condmdi.motion import (Convention, ConventionError, MotionSequence,
                            NormalizationStats, denormalize, global_to_relative,
                            normalize, pad_or_trim, recover_joint_positions,
                            relative_to_global)
from condmdi.skeleton import HUMANOID22, SkeletonSpec

from conftest import random_global, random_relative


def loop_accumulate(rot_vel, dxz, rotate=True):
    """Independent scalar-loop oracle: cumulative rotate-and-sum."""
    n = len(rot_vel)
    theta = np.zeros(n)
    pos = np.zeros((n, 2))
    for i in range(1, n):
        theta[i] = theta[i - 1] + rot_vel[i - 1]
        c, s = np.cos(theta[i - 1]), np.sin(theta[i - 1])
        step = dxz[i - 1]
        if rotate:
            step = np.array([c * step[0] + s * step[1],
                             -s * step[0] + c * step[1]])
        pos[i] = pos[i - 1] + step
    return theta, pos


class TestRelativeToGlobal:
    def test_zero_velocities_stay_at_origin(self, layout):
        data = np.zeros((12, layout.total_width), dtype=np.float32)
        data[:, 3] = 0.9  # height untouched by the conversion
        seq = MotionSequence(data=data, fps=20, valid_length=12,
                             convention=Convention.RELATIVE_ROOT, layout=layout)
        g = relative_to_global(seq)
        assert np.all(g.data[:, 0] == 0)
        assert np.all(g.data[:, 1:3] == 0)
        assert np.all(g.data[:, 3] == np.float32(0.9))

    def test_unit_steps_walk_the_x_axis(self, layout):
        data = np.zeros((10, layout.total_width), dtype=np.float32)
        data[:, 1] = 1.0
        seq = MotionSequence(data=data, fps=20, valid_length=10,
                             convention=Convention.RELATIVE_ROOT, layout=layout)
        g = relative_to_global(seq)
        np.testing.assert_allclose(g.data[:, 1], np.arange(10), atol=1e-6)
        np.testing.assert_allclose(g.data[:, 2], 0, atol=1e-6)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_loop_oracle(self, layout, seed):
        rng = np.random.default_rng(seed)
        seq = random_relative(layout, rng, num_frames=40)
        g = relative_to_global(seq)
        theta, pos = loop_accumulate(seq.data[:40, 0].astype(np.float64),
                                     seq.data[:40, 1:3].astype(np.float64))
        np.testing.assert_allclose(g.data[:, 0], theta, atol=1e-6)
        np.testing.assert_allclose(g.data[:, 1:3], pos, atol=1e-6)

    def test_naive_sum_mode_skips_rotation(self, layout):
        rng = np.random.default_rng(9)
        seq = random_relative(layout, rng, num_frames=20)
        g = relative_to_global(seq, mode="naive_sum")
        theta, pos = loop_accumulate(seq.data[:20, 0].astype(np.float64),
                                     seq.data[:20, 1:3].astype(np.float64),
                                     rotate=False)
        np.testing.assert_allclose(g.data[:, 1:3], pos, atol=1e-6)

    def test_rejects_wrong_convention(self, layout):
        rng = np.random.default_rng(0)
        with pytest.raises(ConventionError):
            relative_to_global(random_global(layout, rng))

    def test_padding_rows_stay_zero(self, layout):
        rng = np.random.default_rng(1)
        seq = random_relative(layout, rng, num_frames=30, valid=18)
        g = relative_to_global(seq)
        assert not np.any(g.data[18:])


class TestGlobalToRelative:
    def test_round_trip_identity(self, layout):
        rng = np.random.default_rng(4)
        seq = random_relative(layout, rng, num_frames=25)
        back = global_to_relative(relative_to_global(seq))
        assert np.abs(back.data - seq.data).max() < 1e-5

    def test_constant_position_gives_zero_deltas(self, layout):
        data = np.zeros((8, layout.total_width), dtype=np.float32)
        data[:, 0] = 0.4
        data[:, 1] = 2.0
        data[:, 2] = -1.0
        seq = MotionSequence(data=data, fps=20, valid_length=8,
                             convention=Convention.GLOBAL_ROOT, layout=layout)
        rel = global_to_relative(seq)
        assert np.all(rel.data[:, 0:3] == 0)

    @pytest.mark.parametrize("seed", range(100))
    def test_round_trip_over_many_seeds(self, layout, seed):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(2, 40))
        seq = random_relative(layout, rng, num_frames=n)
        back = global_to_relative(relative_to_global(seq))
        assert np.abs(back.data - seq.data).max() < 1e-5

    def test_rejects_wrong_convention(self, layout):
        rng = np.random.default_rng(0)
        with pytest.raises(ConventionError):
            global_to_relative(random_relative(layout, rng))


class TestRecoverJointPositions:
    def test_zero_heading_offsets_local_positions_by_height(self, layout):
        data = np.zeros((3, layout.total_width), dtype=np.float32)
        data[:, 3] = 0.9
        data[:, 4:7] = [0.3, -0.2, 0.1]
        seq = MotionSequence(data=data, fps=20, valid_length=3,
                             convention=Convention.GLOBAL_ROOT, layout=layout)
        pos = recover_joint_positions(seq, HUMANOID22)
        np.testing.assert_allclose(pos[0, 0], [0, 0.9, 0], atol=1e-7)
        np.testing.assert_allclose(pos[0, 1], [0.3, 0.7, 0.1], atol=1e-6)

    def test_quarter_turn_rotates_offsets(self, layout):
        # 2x2 rotation oracle: at heading pi/2 a local (1, 0, 0) offset
        # lands at (0, 0, -1) in the y-up right-handed world
        data = np.zeros((1, layout.total_width), dtype=np.float32)
        data[:, 0] = np.pi / 2
        data[:, 4:7] = [1.0, 0.0, 0.0]
        seq = MotionSequence(data=data, fps=20, valid_length=1,
                             convention=Convention.GLOBAL_ROOT, layout=layout)
        pos = recover_joint_positions(seq, HUMANOID22)
        np.testing.assert_allclose(pos[0, 1], [0, 0, -1], atol=1e-6)

    def test_translation_moves_all_joints_rigidly(self, layout):
        rng = np.random.default_rng(3)
        seq = random_global(layout, rng, num_frames=6)
        base = recover_joint_positions(seq, HUMANOID22)
        shifted = seq.data.copy()
        shifted[:6, 1] += 1.5
        shifted[:6, 2] += -0.7
        seq2 = seq.with_data(shifted)
        moved = recover_joint_positions(seq2, HUMANOID22)
        np.testing.assert_allclose(moved - base,
                                   np.broadcast_to([1.5, 0, -0.7], base.shape),
                                   atol=1e-5)

    def test_rigid_transform_equivariance(self, layout):
        rng = np.random.default_rng(8)
        seq = random_global(layout, rng, num_frames=10)
        base = recover_joint_positions(seq, HUMANOID22)

        dtheta, tx, tz = 0.83, 0.4, -1.2
        c, s = np.cos(dtheta), np.sin(dtheta)
        rot = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])
        data = seq.data.copy()
        data[:10, 0] += dtheta
        xz = data[:10, 1:3].astype(np.float64)
        data[:10, 1] = c * xz[:, 0] + s * xz[:, 1] + tx
        data[:10, 2] = -s * xz[:, 0] + c * xz[:, 1] + tz
        moved = recover_joint_positions(seq.with_data(data), HUMANOID22)

        expected = base @ rot.T + np.array([tx, 0, tz])
        np.testing.assert_allclose(moved, expected, atol=1e-6)


class TestPadOrTrim:
    def test_identity_when_lengths_match(self, layout):
        rng = np.random.default_rng(0)
        seq = random_relative(layout, rng, num_frames=20)
        out = pad_or_trim(seq, 20)
        assert out is seq

    def test_pads_39_to_196_with_zero_rows(self, layout):
        rng = np.random.default_rng(2)
        seq = random_relative(layout, rng, num_frames=39)
        out = pad_or_trim(seq, 196)
        assert out.num_frames == 196
        assert out.valid_length == 39
        assert not np.any(out.data[39:])
        np.testing.assert_array_equal(out.data[:39], seq.data)

    def test_trim_drops_trailing_frames(self, layout):
        rng = np.random.default_rng(5)
        seq = random_relative(layout, rng, num_frames=200)
        out = pad_or_trim(seq, 196)
        assert out.num_frames == 196
        assert out.valid_length == 196

    def test_rejects_zero_target(self, layout):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError):
            pad_or_trim(random_relative(layout, rng, num_frames=4), 0)


class TestNormalization:
    def test_unit_stats_are_identity(self, layout):
        rng = np.random.default_rng(0)
        seq = random_global(layout, rng)
        stats = NormalizationStats(mean=np.zeros(layout.total_width),
                                   std=np.ones(layout.total_width))
        np.testing.assert_array_equal(normalize(seq, stats).data, seq.data)

    def test_constant_column_normalizes_to_zero(self, layout):
        data = np.full((5, layout.total_width), 3.25, dtype=np.float32)
        seq = MotionSequence(data=data, fps=20, valid_length=5,
                             convention=Convention.GLOBAL_ROOT, layout=layout)
        stats = NormalizationStats.from_frames(seq.data)
        assert np.all(normalize(seq, stats).data == 0)

    @pytest.mark.parametrize("seed", range(10))
    def test_round_trip(self, layout, seed):
        rng = np.random.default_rng(seed)
        seq = random_global(layout, rng, num_frames=24, valid=20)
        stats = NormalizationStats.from_frames(seq.data[:20])
        back = denormalize(normalize(seq, stats), stats)
        assert np.abs(back.data - seq.data).max() < 1e-6

    def test_rejects_floored_std_violation(self):
        with pytest.raises(ValueError):
            NormalizationStats(mean=np.zeros(3), std=np.array([1.0, 0.0, 1.0]))


class TestSequenceInvariants:
    def test_rejects_nonfinite(self, layout):
        data = np.zeros((4, layout.total_width), dtype=np.float32)
        data[1, 5] = np.nan
        with pytest.raises(ValueError):
            MotionSequence(data=data, fps=20, valid_length=4,
                           convention=Convention.GLOBAL_ROOT, layout=layout)

    def test_rejects_nonzero_padding(self, layout):
        data = np.zeros((4, layout.total_width), dtype=np.float32)
        data[3, 5] = 1.0
        with pytest.raises(ValueError):
            MotionSequence(data=data, fps=20, valid_length=3,
                           convention=Convention.GLOBAL_ROOT, layout=layout)

    def test_column_accounting(self, layout):
        widths = [sl.stop - sl.start for sl in layout.block_slices().values()]
        assert widths == [1, 2, 1, 63, 126, 66, 4]
        assert sum(widths) == 263 == layout.total_width


def test_skeleton_rejects_cycles():
    with pytest.raises(ValueError):
        SkeletonSpec(name="bad", joint_names=("root", "a", "b"),
                     parent_index=(-1, 2, 1),
                     rest_offset=np.zeros((3, 3)),
                     left_foot_ids=(), right_foot_ids=())
