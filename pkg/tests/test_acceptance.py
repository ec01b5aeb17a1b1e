"""End-to-end acceptance checks, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary (see
``conftest.py``). Criteria 1 and 10 generate thousands of 227x227 images and
take a few minutes on a single core.
"""

import math
import time

import numpy as np
import pytest

from gestaug.baselines import cutmix, mixup, paste_box
from gestaug.core import GestureSample, HardLabel, read_png
from gestaug.datasets import (
    ParseError,
    SkeletonSequence,
    export_normalized,
    import_normalized,
    parse_skeleton_text,
    parse_split_index,
)
from gestaug.pipeline import MANIFEST_NAME, AugmentConfig, augment_dataset, load_manifest
from gestaug.render import FRONT_AWAY, SIDE_LEFT, TOP_DOWN, RenderSettings, luminance, render_sequence
from gestaug.sampler import SplitMix64, params_for
from gestaug.synthetic import random_walk_sequence, smooth_image, synthetic_dataset
from gestaug.transforms import AugmentationParams, Toggles, apply_chain, rotate

from conftest import random_image
from test_baselines import membership_oracle
from test_transforms import inscribed_disk_mad, oracle_crop, oracle_rot90, sequential


def note(request, text):
    request.node.user_properties.append(("detail", text))
    print(text)


# 1 ----------------------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(1, "quadrupling contract, copies=3 gives 4N entries and 4N files")
@pytest.mark.parametrize("n", [1, 10, 2800])
def test_quadrupling(tmp_path, request, n):
    t0 = time.perf_counter()
    src = synthetic_dataset(tmp_path / "in", n, 227, seed=n)
    m = augment_dataset(src, tmp_path / "out", AugmentConfig(seed=1, copies=3))
    dt = time.perf_counter() - t0
    files = list((tmp_path / "out" / "images").glob("*.png"))
    note(request, f"N={n}: {len(m.entries)} entries, {len(files)} files, {dt:.1f}s")
    assert len(m.entries) == 4 * n
    assert len(files) == 4 * n
    assert len(load_manifest(tmp_path / "out" / MANIFEST_NAME).entries) == 4 * n
    assert dt < 600


# 2 ----------------------------------------------------------------------------------------

@pytest.mark.criterion(2, "determinism and parallel invariance, workers 1 vs 8")
def test_parallel_invariance(tmp_path, request):
    src = synthetic_dataset(tmp_path / "in", 24, 96, seed=2)
    runs = {}
    for name, workers in (("serial", 1), ("serial-again", 1), ("parallel", 8)):
        augment_dataset(src, tmp_path / name, AugmentConfig(seed=99, workers=workers))
        images = sorted((tmp_path / name / "images").iterdir())
        runs[name] = ((tmp_path / name / MANIFEST_NAME).read_bytes(),
                      [(p.name, p.read_bytes()) for p in images])
    assert runs["serial"] == runs["serial-again"]
    assert runs["serial"] == runs["parallel"]
    note(request, f"{len(runs['serial'][1])} images byte-identical across 3 runs")


# 3 ----------------------------------------------------------------------------------------

@pytest.mark.criterion(3, "apply_chain equals the five sequential ops on 100 random pairs")
def test_composition_fidelity(request):
    rng = np.random.default_rng(3)
    for i in range(100):
        w, h = rng.integers(16, 80, size=2)
        img = random_image(rng, int(w), int(h), int(rng.choice([1, 3])))
        p = params_for(3, f"pair/{i}", 1)
        assert apply_chain(img, p) == sequential(img, p), i
    note(request, "100/100 byte-equal")


# 4 ----------------------------------------------------------------------------------------

@pytest.mark.criterion(4, "identity parameters and all-off toggles reproduce inputs")
def test_identity_suite(tmp_path, request):
    rng = np.random.default_rng(4)
    for _ in range(20):
        img = random_image(rng, int(rng.integers(8, 64)), int(rng.integers(8, 64)))
        assert apply_chain(img, AugmentationParams.identity()) == img
        assert apply_chain(img, params_for(4, "x", 1), toggles=Toggles.none()) == img
    src = synthetic_dataset(tmp_path / "in", 5, 64, seed=4)
    m = augment_dataset(src, tmp_path / "out", AugmentConfig(toggles=Toggles.none()))
    parents = {e.sample_id: e for e in m.originals}
    for e in m.augmented:
        assert read_png(m.resolve(e)) == read_png(m.resolve(parents[e.parent_id]))
    note(request, "20 images x 2 paths plus a 5-sample dataset")


# 5 ----------------------------------------------------------------------------------------

@pytest.mark.criterion(5, "crop, rotate, cutmix and mixup against independent oracles")
def test_oracle_equivalence(request):
    rng = np.random.default_rng(5)
    worst = 0
    for i in range(10):
        img = random_image(rng, int(rng.integers(12, 40)), int(rng.integers(12, 40)))
        p = params_for(5, f"crop/{i}", 1)
        got = apply_chain(img, p, toggles=Toggles.only("crop")).pixels.astype(np.int64)
        worst = max(worst, int(np.abs(got - oracle_crop(img.pixels, p.crop_scale, p.crop_offset_x,
                                                         p.crop_offset_y)).max()))
    assert worst <= 1

    for n in (3, 7, 15, 31):
        img = random_image(rng, n, n)
        for k in range(4):
            assert np.array_equal(rotate(img, 90 * k).pixels, oracle_rot90(img.pixels, k))

    for i in range(50):
        w, h = int(rng.integers(1, 24)), int(rng.integers(1, 24))
        a = GestureSample(random_image(rng, w, h), HardLabel(0, 2), "a")
        b = GestureSample(random_image(rng, w, h), HardLabel(1, 2), "b")
        x1, x2 = sorted(int(v) for v in rng.integers(0, w + 1, size=2))
        y1, y2 = sorted(int(v) for v in rng.integers(0, h + 1, size=2))
        out = paste_box(a, b, (x1, y1, x2, y2))
        want, lam = membership_oracle(a.image.pixels, b.image.pixels, (x1, y1, x2, y2))
        assert out.lam == lam and np.array_equal(out.image.pixels, want)
        drawn = cutmix(a, b, SplitMix64(i))
        want, lam = membership_oracle(a.image.pixels, b.image.pixels, drawn.box)
        assert drawn.lam == lam and np.array_equal(drawn.image.pixels, want)

        assert mixup(a, b, 1.0).image == a.image and mixup(a, b, 0.0).image == b.image
    note(request, f"crop max diff {worst}, rot90 exact, cutmix/mixup exact")


# 6 ----------------------------------------------------------------------------------------

@pytest.mark.criterion(6, "sampler ranges and moments over 10,000 draws")
def test_sampler_distributions(request):
    ps = [params_for(20240601, f"draw/{i}", 1 + i % 3) for i in range(10_000)]
    bad = sum(1 for p in ps if p.violations())
    theta = math.fsum(p.theta_deg for p in ps) / len(ps)
    zeta = math.fsum(p.zeta for p in ps) / len(ps)
    frac = sum(p.crop_scale == 0.9 for p in ps) / len(ps)
    note(request, f"violations={bad} mean(theta)={theta:.4f} mean(zeta)={zeta:.5f} P(s=0.9)={frac:.4f}")
    assert bad == 0
    assert -0.5 <= theta <= 0.5
    assert 0.995 <= zeta <= 1.005
    assert 0.47 <= frac <= 0.53


# 7 ----------------------------------------------------------------------------------------

@pytest.mark.criterion(7, "rotation round-trip error within 6/255 on the 0.7 disk")
def test_rotation_round_trip(request):
    worst = 0.0
    for i in range(20):
        img = smooth_image(np.random.default_rng(700 + i), 227, 227)
        for theta in (5, -5, 15, -15):
            back = rotate(rotate(img, theta), -theta)
            worst = max(worst, inscribed_disk_mad(back.pixels, img.pixels))
    note(request, f"worst mean abs diff {worst * 255:.3f}/255")
    assert worst <= 6 / 255


# 8 ----------------------------------------------------------------------------------------

def disjoint_rows(frames, joints=6):
    seq = np.zeros((frames, joints, 3))
    seq[:, :, 0] = np.arange(joints)
    seq[:, :, 1] = np.arange(frames)[:, None] * 2.0
    return SkeletonSequence(seq)


@pytest.mark.criterion(8, "renderer luminance order, translation/scale invariance, bounds")
def test_renderer_invariants(request):
    s = RenderSettings(width=96, height=96, draw_bones=False, joint_radius=1)
    for frames in (2, 3, 5, 8):
        img = render_sequence(disjoint_rows(frames), FRONT_AWAY, s).pixels
        lum = luminance(img)
        drawn = img.any(axis=2)
        rows = [r for r in range(img.shape[0]) if drawn[r].any()]
        # rows cluster by frame: the topmost belongs to the last frame
        groups, current = [], [rows[0]]
        for r in rows[1:]:
            if r == current[-1] + 1:
                current.append(r)
            else:
                groups.append(current)
                current = [r]
        groups.append(current)
        assert len(groups) == frames
        lums = [lum[g][drawn[g]] for g in reversed(groups)]  # oldest frame first
        for older, newer in zip(lums, lums[1:]):
            assert newer.min() > older.max()

    rng = np.random.default_rng(8)
    for i in range(20):
        seq = random_walk_sequence(rng, frames=12)
        view = (TOP_DOWN, FRONT_AWAY, SIDE_LEFT)[i % 3]
        base = render_sequence(seq, view)
        shifted = SkeletonSequence(seq.frames + rng.uniform(-100, 100, size=3))
        scaled = SkeletonSequence(seq.frames * rng.uniform(0.01, 100))
        assert render_sequence(shifted, view) == base
        assert render_sequence(scaled, view) == base

    s = RenderSettings(width=64, height=64, margin=0.1)
    for sign in (1, -1):
        frames = rng.choice([-1.0, 1.0], size=(6, 22, 3)) * 1e9 * sign
        img = render_sequence(SkeletonSequence(frames), FRONT_AWAY, s).pixels
        ys, xs = np.nonzero(img.any(axis=2))
        assert ys.min() >= 6 and ys.max() <= 57 and xs.min() >= 6 and xs.max() <= 57
    note(request, "4 layouts ordered, 20 sequences invariant, +-1e9 inside inset")


# 9 ----------------------------------------------------------------------------------------

@pytest.mark.criterion(9, "normalized export/import round-trip and line-numbered parse errors")
def test_parser_round_trip(tmp_path, request):
    rng = np.random.default_rng(9)
    worst = 0.0
    for i in range(50):
        joints = 15 if i % 5 == 0 else 22
        frames = rng.normal(scale=10 ** rng.uniform(-3, 3), size=(int(rng.integers(1, 40)), joints, 3))
        p = tmp_path / f"{i}.json"
        export_normalized(p, SkeletonSequence(frames), f"s/{i}")
        back = import_normalized(p, joint_count=joints).sequence.frames
        worst = max(worst, float(np.abs(back - frames).max()))
    assert worst <= 1e-9

    good = " ".join(["0.5"] * 66)
    cases = {
        "short.txt": (good + "\n" + " ".join(["1"] * 65) + "\n", 2),
        "word.txt": (good + "\n" + good + "\n" + good.replace("0.5", "abc", 1) + "\n", 3),
    }
    for name, (text, line) in cases.items():
        (tmp_path / name).write_text(text)
        with pytest.raises(ParseError) as info:
            parse_skeleton_text(tmp_path / name)
        assert info.value.line == line and f":{line}:" in str(info.value)
    (tmp_path / "idx.txt").write_text("1 1 1 1 1 1 5\n2 1 1 1 2 3 5\n20 1 1 1 20 1 5\n")
    with pytest.raises(ParseError) as info:
        parse_split_index(tmp_path / "idx.txt", scheme=14)
    assert info.value.line == 3
    note(request, f"50 sequences, worst error {worst:g}; 3 malformed fixtures report their line")


# 10 ---------------------------------------------------------------------------------------

@pytest.mark.slow
@pytest.mark.criterion(10, "throughput >= 100 images/s, 1000 inputs at 227x227, 4 workers")
def test_throughput(tmp_path, request):
    src = synthetic_dataset(tmp_path / "in", 1000, 227, seed=10)
    t0 = time.perf_counter()
    par = augment_dataset(src, tmp_path / "w4", AugmentConfig(seed=10, workers=4))
    dt = time.perf_counter() - t0
    ser = augment_dataset(src, tmp_path / "w1", AugmentConfig(seed=10, workers=1))
    written = len(par.entries)
    rate = written / dt
    note(request, f"{written} images written in {dt:.1f}s = {rate:.1f} images/s "
                  f"({1000 / dt:.1f} inputs/s)")
    assert [(e.sample_id, e.digest) for e in par.entries] == [(e.sample_id, e.digest) for e in ser.entries]
    assert rate >= 100
