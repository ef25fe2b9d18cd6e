import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recap.config import SegmentationConfig, SsimConfig
from recap.frames import LumaPlane, recording_from_arrays
from recap.segmentation import (
    ActionClip,
    ActionKind,
    KeyboardFlags,
    SimilaritySignal,
    build_keyboard_flags,
    compute_signal,
    detect_keyboard,
    segment_actions,
    smooth_signal,
    split_ocr_streams,
    ssim,
)
from tests.conftest import gray_recording, random_plane

C1 = SsimConfig.c1
C2 = SsimConfig.c2


def naive_ssim(a, b, window=7, c1=C1, c2=C2):
    """Direct two-loop evaluation of the windowed formula (the oracle)."""
    x = a.astype(np.float64)
    y = b.astype(np.float64)
    h, w = x.shape
    vals = []
    for i in range(h - window + 1):
        for j in range(w - window + 1):
            wx = x[i:i + window, j:j + window]
            wy = y[i:i + window, j:j + window]
            mx, my = wx.mean(), wy.mean()
            vx, vy = wx.var(), wy.var()
            cov = (wx * wy).mean() - mx * my
            vals.append(((2 * mx * my + c1) * (2 * cov + c2))
                        / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return float(np.mean(vals))


class TestSsim:
    def test_self_similarity_is_exactly_one(self, rng):
        p = random_plane(rng, 20, 24)
        assert ssim(p, p) == 1.0

    def test_black_vs_white_is_stabilizer_dominated(self):
        a = LumaPlane(np.zeros((16, 16), dtype=np.uint8))
        b = LumaPlane(np.full((16, 16), 255, dtype=np.uint8))
        score = ssim(a, b)
        # Constant planes: variance terms are 1, luminance term is the
        # closed form C1 / (255^2 + C1).
        assert score == pytest.approx(C1 / (255.0 ** 2 + C1), abs=1e-15)
        assert score < 0.01

    def test_matches_naive_reference(self, rng):
        a = random_plane(rng, 18, 22)
        b = random_plane(rng, 18, 22)
        assert ssim(a, b) == pytest.approx(naive_ssim(a.values, b.values), abs=1e-9)

    def test_matches_naive_on_button_region_change(self, rng):
        base = rng.integers(0, 256, (64, 36), dtype=np.uint8)
        changed = base.copy()
        changed[20:30, 10:20] = 255 - changed[20:30, 10:20]
        a, b = LumaPlane(base), LumaPlane(changed)
        assert ssim(a, b) == pytest.approx(naive_ssim(base, changed), abs=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6))
    def test_symmetry(self, seed):
        r = np.random.default_rng(seed)
        a = random_plane(r, 12, 14)
        b = random_plane(r, 12, 14)
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-12

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10**6))
    def test_range(self, seed):
        r = np.random.default_rng(seed)
        a = random_plane(r, 12, 14)
        b = random_plane(r, 12, 14)
        assert -1.0 <= ssim(a, b) <= 1.0

    def test_dimension_mismatch_rejected(self, rng):
        with pytest.raises(ValueError, match="dimensions"):
            ssim(random_plane(rng, 10, 10), random_plane(rng, 10, 12))

    def test_window_must_be_odd_and_fit(self, rng):
        p = random_plane(rng, 10, 10)
        with pytest.raises(ValueError):
            ssim(p, p, window=4)
        with pytest.raises(ValueError):
            ssim(p, p, window=11)


class TestComputeSignal:
    def test_identical_frames_score_one(self):
        rec = gray_recording([128] * 5)
        signal = compute_signal(rec)
        assert len(signal) == 4
        np.testing.assert_allclose(signal.scores, 1.0)

    def test_fewer_than_two_frames_rejected(self):
        rec = gray_recording([128])
        with pytest.raises(ValueError, match="2 frames"):
            compute_signal(rec)

    def test_scores_are_ordered_pairs(self, rng):
        arrays = [rng.integers(0, 256, (32, 32, 3), dtype=np.uint8) for _ in range(4)]
        rec = recording_from_arrays(arrays, fps=30.0)
        cfg = SegmentationConfig(downsample_factor=1, pre_blur=False)
        signal = compute_signal(rec, cfg)
        from recap.frames import rgb_to_luma

        for i in range(3):
            expected = ssim(rgb_to_luma(arrays[i]), rgb_to_luma(arrays[i + 1]))
            assert signal.scores[i] == pytest.approx(expected, abs=1e-12)


class TestDetectKeyboard:
    @pytest.mark.parametrize("text,num,expected", [
        ("helloqwertyuiopworld", "", True),
        ("QWERTYUIOP", "", True),         # uppercase rows are lowercased
        ("xasdfgx", "", True),
        ("zxcvbnm", "", True),
        ("", "123", True),
        ("", "9456", True),
        ("", "789", True),
        ("hello world", "42", False),
        ("", "", False),
        ("qwert", "", True),
        ("qwer", "124", False),           # near misses do not trigger
    ])
    def test_trigger_table(self, text, num, expected):
        assert detect_keyboard(text, num) is expected

    def test_split_ocr_streams(self):
        letters, digits = split_ocr_streams(["Price: 40", "ok 2!"])
        assert letters == "Priceok"
        assert digits == "402"


def make_signal(scores, fps=30.0):
    return SimilaritySignal(scores=np.asarray(scores, dtype=np.float64), fps=fps)


def no_keyboard(n):
    return KeyboardFlags(sampled_indices=[0], sampled_flags=[False], n_frames=n)


class TestSegmentActions:
    def test_flat_signal_yields_no_clips(self):
        signal = make_signal([1.0] * 40)
        assert segment_actions(signal, no_keyboard(41)) == []

    def test_instantaneous_drop_is_tap(self):
        scores = [1.0] * 10 + [0.5, 0.5] + [1.0] * 10
        clips = segment_actions(make_signal(scores), no_keyboard(23))
        assert [c.kind for c in clips] == [ActionKind.TAP]
        assert (clips[0].start_frame, clips[0].end_frame) == (10, 12)
        assert clips[0].steady_gap is None

    def test_two_drops_with_short_plateau_merge_into_one_tap(self):
        scores = [1.0] * 10 + [0.5, 0.5] + [1.0] * 8 + [0.6, 0.6] + [1.0] * 10
        clips = segment_actions(make_signal(scores), no_keyboard(43))
        assert [c.kind for c in clips] == [ActionKind.TAP]
        clip = clips[0]
        assert (clip.start_frame, clip.end_frame) == (10, 22)
        assert clip.steady_gap == (12, 20)

    def test_two_drops_with_long_gap_stay_separate(self):
        scores = [1.0] * 10 + [0.5, 0.5] + [1.0] * 30 + [0.6, 0.6] + [1.0] * 10
        clips = segment_actions(make_signal(scores), no_keyboard(65))
        assert [c.kind for c in clips] == [ActionKind.TAP, ActionKind.TAP]

    def test_gradual_recovery_is_scroll(self):
        ramp = list(np.linspace(0.4, 0.9, 12))
        scores = [1.0] * 10 + ramp + [1.0] * 10
        clips = segment_actions(make_signal(scores), no_keyboard(33))
        assert [c.kind for c in clips] == [ActionKind.SCROLL]
        assert (clips[0].start_frame, clips[0].end_frame) == (10, 22)

    def test_oscillations_inside_keyboard_are_input(self):
        scores = ([1.0] * 10 + [0.5, 0.5]            # keyboard opens
                  + ([1.0] * 5 + [0.94] * 3) * 3     # three keystroke cycles
                  + [1.0] * 3 + [0.5, 0.5] + [1.0] * 10)
        n = len(scores) + 1
        kb = KeyboardFlags(sampled_indices=list(range(n)),
                           sampled_flags=[11 <= i <= 39 for i in range(n)],
                           n_frames=n)
        clips = segment_actions(make_signal(scores), kb)
        assert [c.kind for c in clips] == [ActionKind.INPUT]
        clip = clips[0]
        assert clip.start_frame <= 10
        assert clip.end_frame >= 40

    def test_oscillations_without_keyboard_are_not_input(self):
        scores = [1.0] * 10 + ([0.5] + [1.0] * 6) * 4 + [1.0] * 5
        clips = segment_actions(make_signal(scores), no_keyboard(len(scores) + 1))
        assert all(c.kind is ActionKind.TAP for c in clips)

    def test_clips_are_disjoint_and_sorted(self):
        scores = ([1.0] * 8 + [0.5, 0.5] + [1.0] * 20
                  + list(np.linspace(0.4, 0.9, 12)) + [1.0] * 20
                  + [0.6, 0.6] + [1.0] * 8)
        clips = segment_actions(make_signal(scores), no_keyboard(len(scores) + 1))
        assert len(clips) == 3
        for prev, nxt in zip(clips, clips[1:]):
            assert prev.end_frame < nxt.start_frame

    def test_every_clip_contains_a_subthreshold_score(self):
        scores = ([1.0] * 8 + [0.5, 0.5] + [1.0] * 20
                  + list(np.linspace(0.4, 0.9, 12)) + [1.0] * 8)
        signal = make_signal(scores)
        cfg = SegmentationConfig()
        smoothed = smooth_signal(signal.scores, cfg.smooth_window)
        for clip in segment_actions(signal, no_keyboard(len(scores) + 1), cfg):
            window = smoothed[clip.start_frame: clip.end_frame]
            assert (window < cfg.drop_threshold).any()


class TestSmoothing:
    def test_single_sample_flicker_removed(self):
        scores = np.array([1.0, 1.0, 0.2, 1.0, 1.0])
        smoothed = smooth_signal(scores, 3)
        assert (smoothed >= 1.0 - 1e-12).all()

    def test_two_sample_events_survive(self):
        scores = np.array([1.0, 1.0, 0.2, 0.2, 1.0, 1.0])
        smoothed = smooth_signal(scores, 3)
        assert smoothed[2] == 0.2
        assert smoothed[3] == 0.2


class TestKeyboardFlags:
    def test_dense_interpolation_nearest(self):
        kb = KeyboardFlags(sampled_indices=[0, 10], sampled_flags=[False, True],
                           n_frames=11)
        assert not kb.visible_at(0)
        assert not kb.visible_at(5)   # ties go to the earlier sample
        assert kb.visible_at(6)
        assert kb.visible_spans() == [(6, 10)]

    def test_build_flags_samples_on_stride(self):
        rec = gray_recording([128] * 21)
        seen = []

        def texts(i):
            seen.append(i)
            return ["qwertyuiop"] if i >= 10 else ["hello"]

        cfg = SegmentationConfig(kb_sample_stride=5)
        kb = build_keyboard_flags(rec, texts, cfg)
        assert seen == [0, 5, 10, 15, 20]
        assert kb.visible_spans() == [(8, 20)]


class TestClipInvariants:
    def test_clip_validation(self):
        with pytest.raises(ValueError):
            ActionClip(kind=ActionKind.TAP, start_frame=5, end_frame=5)
        with pytest.raises(ValueError):
            ActionClip(kind=ActionKind.TAP, start_frame=5, end_frame=9,
                       steady_gap=(10, 11))
        clip = ActionClip(kind=ActionKind.TAP, start_frame=5, end_frame=9,
                          steady_gap=(6, 8))
        assert clip.n_frames == 5
