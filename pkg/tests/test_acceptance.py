"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; every tolerance is asserted exactly as stated.
"""

import time

import numpy as np
import pytest

from conftest import TEST_GROUP_FACTORIES, random_complex, random_unitary
from equiproj import (
    ENTRY_INFINITY,
    FROBENIUS,
    SPECTRAL,
    ActivationSpec,
    LayerChain,
    LinearLayerSpec,
    SteerableKernel,
    c4_conv_defect,
    commutant_oracle,
    composition_bound_check,
    cyclic_irreps,
    direct_sum_representation,
    fourier_transform,
    hs_inner,
    make_cyclic,
    mixed,
    network_bound_constant,
    norm,
    operator_fourier,
    project_c4_kernel,
    project_c4_kernel_indexwise,
    project_equivariant_circulant,
    project_equivariant_spectral,
    project_finite,
    project_invariant,
    regular_representation,
    tensor_representation,
    trivial_representation,
    worst_case_defect,
)
from equiproj.groups import Representation, conjugated_by_unitary
from equiproj.spectral import GroupFunction, fit_isotypic_block, trivial_irrep_index
from equiproj.toy import (
    TrainConfig,
    accuracy,
    final_defect,
    gen_disk_annulus,
    init_params,
    loss,
    loss_and_grads,
    train_toy,
)

GROUPS = {name: factory() for name, factory in TEST_GROUP_FACTORIES.items()}


def report(number: int, name: str, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number:02d} {status} - {name}: {detail}")
    assert ok, f"criterion {number} failed: {detail}"


def _random_layers(group, count, seed):
    """Random weights under regular (occasionally basis-changed) actions."""
    reg = regular_representation(group)
    rng = np.random.default_rng(seed)
    layers = []
    for i in range(count):
        if i % 10 == 9:
            rep_out = conjugated_by_unitary(reg, random_unitary(rng, group.order))
        else:
            rep_out = reg
        w = random_complex(rng, (group.order, group.order))
        layers.append(LinearLayerSpec(weight=w, rep_in=reg, rep_out=rep_out))
    return layers


def test_criterion_01_reynolds_correctness():
    start = time.monotonic()
    worst = {"idem": 0.0, "adj": 0.0, "defect": 0.0, "oracle": 0.0}
    for group in GROUPS.values():
        layers = _random_layers(group, 100, seed=101)
        for i, layer in enumerate(layers):
            p = project_finite(layer)
            p2 = project_finite(
                LinearLayerSpec(weight=p, rep_in=layer.rep_in, rep_out=layer.rep_out)
            )
            worst["idem"] = max(worst["idem"], float(np.linalg.norm(p2 - p)))
            other = layers[(i + 1) % len(layers)]
            if other.rep_out is layer.rep_out:
                pb = project_finite(other)
                worst["adj"] = max(
                    worst["adj"],
                    abs(hs_inner(p, other.weight) - hs_inner(layer.weight, pb)),
                )
            d = max(
                float(
                    np.linalg.norm(
                        layer.rep_out.matrices[g] @ p - p @ layer.rep_in.matrices[g]
                    )
                )
                for g in range(group.order)
            )
            worst["defect"] = max(worst["defect"], d)
            worst["oracle"] = max(
                worst["oracle"], float(np.max(np.abs(p - commutant_oracle(layer))))
            )
    elapsed = time.monotonic() - start
    ok = (
        worst["idem"] <= 1e-12
        and worst["adj"] <= 1e-10
        and worst["defect"] <= 1e-10
        and worst["oracle"] <= 1e-10
        and elapsed < 30.0
    )
    report(
        1,
        "Reynolds correctness",
        ok,
        f"idempotence {worst['idem']:.2e}, self-adjointness {worst['adj']:.2e}, "
        f"defect {worst['defect']:.2e}, oracle gap {worst['oracle']:.2e}, "
        f"{elapsed:.1f}s",
    )


def test_criterion_02_defect_sandwich():
    start = time.monotonic()
    violations = 0
    ratio_min, ratio_max = np.inf, -np.inf
    for group in GROUPS.values():
        rng = np.random.default_rng(202)
        reg = regular_representation(group)
        for _ in range(1000):
            w = random_complex(rng, (group.order, group.order))
            layer = LinearLayerSpec(weight=w, rep_in=reg, rep_out=reg)
            rep = worst_case_defect(layer, SPECTRAL)
            lo, hi = rep.projection_distance, rep.worst_case
            if not (lo <= hi + 1e-9 and hi <= 2 * lo + 1e-9):
                violations += 1
            if lo > 1e-12:
                ratio = hi / lo
                ratio_min = min(ratio_min, ratio)
                ratio_max = max(ratio_max, ratio)
    elapsed = time.monotonic() - start
    ok = (
        violations == 0
        and ratio_min >= 1.0 - 1e-9
        and ratio_max <= 2.0 + 1e-9
        and elapsed < 120.0
    )
    report(
        2,
        "defect sandwich (5000 layers)",
        ok,
        f"violations {violations}, ratio range [{ratio_min:.6f}, {ratio_max:.6f}], "
        f"{elapsed:.1f}s",
    )


def test_criterion_03_composition_bounds():
    violations = 0
    checked = 0
    for group in GROUPS.values():
        reg = regular_representation(group)
        rng = np.random.default_rng(303)
        for _ in range(200):
            layers = [
                LinearLayerSpec(
                    weight=random_complex(rng, (group.order, group.order)),
                    rep_in=reg,
                    rep_out=reg,
                )
                for _ in range(3)
            ]
            chain = LayerChain(
                layers=layers, activations=[ActivationSpec("identity")] * 2
            )
            comp = composition_bound_check(chain, SPECTRAL)
            net = network_bound_constant(chain)
            checked += 1
            if not (comp.holds and net.holds):
                violations += 1
    report(
        3,
        "composition and network bounds",
        violations == 0,
        f"{checked} chains checked, {violations} violations",
    )


def test_criterion_04_spectral_equals_spatial():
    worst_circ = 0.0
    rng = np.random.default_rng(404)
    for n in (4, 8, 16):
        reg = regular_representation(make_cyclic(n))
        for _ in range(20):
            t = random_complex(rng, (n, n))
            finite = project_finite(LinearLayerSpec(weight=t, rep_in=reg, rep_out=reg))
            circ = project_equivariant_circulant(t)
            worst_circ = max(worst_circ, float(np.max(np.abs(finite - circ))))

    worst_fiber = 0.0
    cat4 = cyclic_irreps(4)
    cat8 = cyclic_irreps(8)
    configs = [
        (cat4, cat4.irreps[1], cat4.irreps[1]),
        (cat4, cat4.irreps[2], cat4.irreps[2]),
        (cat8, cat8.irreps[3], cat8.irreps[3]),
        (
            cat4,
            direct_sum_representation(cat4.irreps[1], cat4.irreps[1]),
            direct_sum_representation(
                direct_sum_representation(cat4.irreps[1], cat4.irreps[1]),
                cat4.irreps[1],
            ),
        ),
    ]
    for cat, fib_in, fib_out in configs:
        reg = regular_representation(cat.group)
        rin = tensor_representation(reg, fib_in)
        rout = tensor_representation(reg, fib_out)
        for _ in range(50):
            t = random_complex(rng, (rout.dim, rin.dim))
            spatial = project_finite(LinearLayerSpec(weight=t, rep_in=rin, rep_out=rout))
            spectral = project_equivariant_spectral(t, cat, fib_in, fib_out)
            worst_fiber = max(worst_fiber, float(np.max(np.abs(spatial - spectral))))
    ok = worst_circ <= 1e-11 and worst_fiber <= 1e-9
    report(
        4,
        "spectral == spatial",
        ok,
        f"circulant gap {worst_circ:.2e}, fiber gap {worst_fiber:.2e}",
    )


def test_criterion_05_invariant_fourier():
    worst_nontrivial = 0.0
    worst_avg = 0.0
    worst_plancherel = 0.0
    for n in (4, 8):
        cat = cyclic_irreps(n)
        triv = trivial_irrep_index(cat)
        rng = np.random.default_rng(505)
        for _ in range(50):
            const = GroupFunction(cat.group, np.full(n, complex(rng.normal(), rng.normal())))
            blocks = fourier_transform(const, cat)
            for idx, blk in enumerate(blocks.blocks):
                if idx != triv:
                    worst_nontrivial = max(worst_nontrivial, float(np.max(np.abs(blk))))
            f = GroupFunction(cat.group, random_complex(rng, n))
            projected = project_invariant(f, cat)
            cayley = cat.group.cayley
            direct = np.array([np.mean(f.values[cayley[:, g]]) for g in range(n)])
            worst_avg = max(worst_avg, float(np.max(np.abs(projected.values - direct))))
            fb = fourier_transform(f, cat)
            lhs = float(np.sum(np.abs(f.values) ** 2)) / n
            rhs = float(
                sum(
                    rep.dim * np.sum(np.abs(blk) ** 2)
                    for rep, blk in zip(cat.irreps, fb.blocks)
                )
            )
            worst_plancherel = max(worst_plancherel, abs(lhs - rhs))
    ok = worst_nontrivial < 1e-12 and worst_avg <= 1e-12 and worst_plancherel <= 1e-11
    report(
        5,
        "invariant Fourier coefficients",
        ok,
        f"non-trivial blocks {worst_nontrivial:.2e}, averaging gap {worst_avg:.2e}, "
        f"Plancherel {worst_plancherel:.2e}",
    )


def test_criterion_06_block_diagonality():
    worst_off = 0.0
    worst_fit = 0.0
    for n in (4, 8):
        cat = cyclic_irreps(n)
        triv_rep = trivial_representation(cat.group)
        reg = regular_representation(cat.group)
        rng = np.random.default_rng(606)
        for _ in range(20):
            t = random_complex(rng, (n, n))
            projected = project_finite(LinearLayerSpec(weight=t, rep_in=reg, rep_out=reg))
            blocks = operator_fourier(projected, cat, triv_rep, triv_rep)
            for i in range(n):
                for j in range(n):
                    if i != j:
                        worst_off = max(
                            worst_off, float(np.linalg.norm(blocks.block(i, j)))
                        )
            for i in range(n):
                _, residual = fit_isotypic_block(blocks.block(i, i), cat.irreps[i].dim)
                worst_fit = max(worst_fit, residual)
    ok = worst_off < 1e-10 and worst_fit < 1e-9
    report(
        6,
        "equivariant block-diagonality",
        ok,
        f"off-diagonal {worst_off:.2e}, structure fit residual {worst_fit:.2e}",
    )


def test_criterion_07_c4_kernel_projection():
    rng = np.random.default_rng(707)
    forms_equal = True
    worst_fixed = 0.0
    worst_conv = 0.0
    for i in range(20):
        c_out, c_in = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        size = int(rng.choice([3, 5]))
        kernel = SteerableKernel(rng.normal(size=(c_out, c_in, 4, 4, size, size)))
        avg = project_c4_kernel(kernel)
        idx = project_c4_kernel_indexwise(kernel)
        forms_equal = forms_equal and np.array_equal(avg.values, idx.values)
        again = project_c4_kernel(avg)
        worst_fixed = max(worst_fixed, float(np.max(np.abs(again.values - avg.values))))
        worst_conv = max(worst_conv, c4_conv_defect(avg, trials=10, seed=700 + i))
    ok = forms_equal and worst_fixed <= 1e-13 and worst_conv <= 1e-10
    report(
        7,
        "C4 steerable kernel projection",
        ok,
        f"forms identical {forms_equal}, fixed-point drift {worst_fixed:.2e}, "
        f"conv defect {worst_conv:.2e}",
    )


def test_criterion_08_training_defect_trend():
    start = time.monotonic()
    lambdas = [0.0, 0.001, 0.01, 0.1]
    seeds = [0, 1, 2, 3, 4]
    defects = {}
    accuracies = {}
    for seed in seeds:
        data = gen_disk_annulus(150, seed=seed)
        for lam in lambdas:
            cfg = TrainConfig(lambda_g=0.0, lambda_perp=lam, seed=seed)
            result = train_toy(data, cfg)
            defects[(seed, lam)] = final_defect(result)
            if lam == 0.0:
                accuracies[seed] = accuracy(
                    result.params, data.train_points, data.train_labels
                )
    elapsed = time.monotonic() - start

    monotone_votes = 0
    tenfold_votes = 0
    for seed in seeds:
        series = [defects[(seed, lam)] for lam in lambdas]
        monotone = all(
            series[i + 1] <= series[i] * 1.10 for i in range(len(series) - 1)
        )
        monotone_votes += monotone
        tenfold_votes += series[-1] * 10 <= series[0]
    min_accuracy = min(accuracies.values())
    ok = (
        monotone_votes >= 3
        and tenfold_votes >= 3
        and min_accuracy >= 0.95
        and elapsed < 900.0
    )
    report(
        8,
        "training defect trend",
        ok,
        f"monotone {monotone_votes}/5 seeds, 10x drop {tenfold_votes}/5 seeds, "
        f"min train accuracy {min_accuracy:.3f}, {elapsed:.0f}s",
    )


def test_criterion_09_gradient_fidelity():
    worst_excess = 0.0
    for draw in range(20):
        cfg = TrainConfig(
            seed=900 + draw,
            hidden=2,
            lambda_g=0.03 + 0.01 * (draw % 3),
            lambda_perp=0.05 + 0.02 * (draw % 2),
        )
        params = init_params(cfg)
        rng = np.random.default_rng(950 + draw)
        pts = rng.normal(size=(5, 2)) * 1.5
        labels = np.where(rng.normal(size=5) > 0, 1, -1)
        _, _, grads = loss_and_grads(pts, labels, params, cfg)
        values = params.trainable()
        step = 1e-5
        for name, arr in values.items():
            flat = np.atleast_1d(arr).reshape(-1)
            g_flat = np.atleast_1d(grads[name]).reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                plus = loss((pts, labels), params.with_trainable(values), cfg)
                flat[i] = orig - step
                minus = loss((pts, labels), params.with_trainable(values), cfg)
                flat[i] = orig
                fd = (plus - minus) / (2 * step)
                g = g_flat[i]
                worst_excess = max(
                    worst_excess, abs(fd - g) / max(1e-4 * abs(g), 1e-8)
                )
    ok = worst_excess < 1.0
    report(
        9,
        "gradient fidelity vs finite differences",
        ok,
        f"worst error at {worst_excess:.3f} of tolerance (rel 1e-4, floor 1e-8)",
    )


def test_criterion_10_norm_family():
    rng = np.random.default_rng(1010)
    worst_mixed = 0.0
    for _ in range(50):
        a = random_complex(rng, (6, 6))
        worst_mixed = max(worst_mixed, abs(norm(a, mixed(2, 2)) - norm(a, FROBENIUS)))

    sampled_ok = True
    for d in (2, 3, 5, 8):
        a = random_complex(rng, (d, d))
        sigma = norm(a, SPECTRAL)
        v = rng.normal(size=(d, 10_000)) + 1j * rng.normal(size=(d, 10_000))
        v /= np.linalg.norm(v, axis=0, keepdims=True)
        sampled = float(np.max(np.linalg.norm(a @ v, axis=0)))
        sampled_ok = sampled_ok and sampled <= sigma + 1e-9
    # tightness of the sampled bound is checkable on the real 2-D circle
    b = np.random.default_rng(3).normal(size=(2, 2))
    dirs = np.random.default_rng(3).normal(size=(2, 10_000))
    dirs /= np.linalg.norm(dirs, axis=0, keepdims=True)
    tight_gap = norm(b, SPECTRAL) - float(np.max(np.linalg.norm(b @ dirs, axis=0)))

    worst_homog = 0.0
    kinds = [SPECTRAL, FROBENIUS, ENTRY_INFINITY] + [
        mixed(p, q) for p in (1, 2, 3) for q in (1, 2, 3)
    ]
    for kind in kinds:
        for _ in range(10):
            a = random_complex(rng, (4, 5))
            c = complex(rng.normal(), rng.normal())
            worst_homog = max(
                worst_homog, abs(norm(c * a, kind) - abs(c) * norm(a, kind))
            )
    ok = worst_mixed <= 1e-12 and sampled_ok and tight_gap <= 1e-6 and worst_homog <= 1e-12
    report(
        10,
        "norm family",
        ok,
        f"|mixed(2,2)-frobenius| {worst_mixed:.2e}, sampled bound ok {sampled_ok}, "
        f"2-D tightness gap {tight_gap:.2e}, homogeneity {worst_homog:.2e}",
    )


def _block_shift_representation(n: int, dim: int) -> Representation:
    """C_n acting on C^dim by shifting dim/n positions per generator step."""
    assert dim % n == 0
    group = make_cyclic(n)
    step = dim // n
    mats = np.zeros((n, dim, dim), dtype=np.complex128)
    cols = np.arange(dim)
    for g in range(n):
        mats[g, (cols + g * step) % dim, cols] = 1.0
    return Representation.unchecked(group, dim, mats)


def test_criterion_11_cost_scaling():
    dim = 48
    rng = np.random.default_rng(1111)
    w = random_complex(rng, (dim, dim))

    def median_time(n_group):
        rep = _block_shift_representation(n_group, dim)
        layer = LinearLayerSpec(weight=w, rep_in=rep, rep_out=rep)
        for _ in range(3):
            project_finite(layer)
        times = []
        for _ in range(9):
            t0 = time.perf_counter()
            project_finite(layer)
            times.append(time.perf_counter() - t0)
        return float(np.median(times))

    t4 = median_time(4)
    t16 = median_time(16)
    ratio = t16 / t4
    ok = 2.5 <= ratio <= 6.0
    report(
        11,
        "cost scaling linear in |G|",
        ok,
        f"time(C16)/time(C4) = {ratio:.2f} (C4 {t4 * 1e3:.2f}ms, C16 {t16 * 1e3:.2f}ms)",
    )
