"""The clipped-surrogate loss: hand-pinned values and finite-difference
validation of its output gradients (treating network outputs as free
variables; the network chain itself is checked in test_gradients)."""

import math

import numpy as np

from crowdnav.rl.losses import LOG_2PI, gaussian_entropy, gaussian_logp, ppo_loss


def test_gaussian_logp_at_mean():
    a = np.array([[0.3, -0.7]])
    assert gaussian_logp(a, a.copy(), np.zeros(2))[0] == -LOG_2PI


def test_gaussian_logp_hand_value():
    # one dimension offset by 1 std: logp = -0.5 - log(2 pi) with s = 0
    a = np.array([1.0, 0.0])
    mu = np.array([0.0, 0.0])
    got = gaussian_logp(a, mu, np.zeros(2))
    assert abs(got - (-0.5 - LOG_2PI)) < 1e-15


def test_gaussian_logp_scales_with_std():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a, mu = rng.standard_normal(2), rng.standard_normal(2)
        s = rng.standard_normal(2) * 0.5
        expected = sum(
            -0.5 * ((a[i] - mu[i]) / math.exp(s[i])) ** 2 - s[i] - 0.5 * LOG_2PI
            for i in range(2)
        )
        assert abs(gaussian_logp(a, mu, s) - expected) < 1e-12


def test_entropy_is_state_independent_formula():
    s = np.array([0.25, -0.5])
    expected = (0.25 + 0.5 * (1 + LOG_2PI)) + (-0.5 + 0.5 * (1 + LOG_2PI))
    assert abs(gaussian_entropy(s) - expected) < 1e-15


def _random_instance(rng, t_len=4, b=3):
    values = rng.standard_normal((t_len, b))
    means = rng.standard_normal((t_len, b, 2)) * 0.5
    log_std = rng.standard_normal(2) * 0.3
    actions = means + np.exp(log_std) * rng.standard_normal((t_len, b, 2))
    old_logps = gaussian_logp(actions, means + rng.standard_normal((t_len, b, 2)) * 0.1, log_std)
    advantages = rng.standard_normal((t_len, b))
    returns = rng.standard_normal((t_len, b))
    return values, means, log_std, actions, old_logps, advantages, returns


def _off_kink(values, means, log_std, actions, old_logps, advantages, clip_eps):
    """Probes near the clip boundary make finite differences meaningless."""
    ratio = np.exp(gaussian_logp(actions, means, log_std) - old_logps)
    margin = np.minimum(np.abs(ratio - (1 - clip_eps)), np.abs(ratio - (1 + clip_eps)))
    return np.all(margin > 1e-3) and np.all(np.abs(advantages) > 1e-3)


def test_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(77)
    clip_eps, value_coef, entropy_coef = 0.2, 0.5, 0.01
    eps = 1e-6
    checked = 0
    while checked < 8:
        inst = _random_instance(rng)
        values, means, log_std, actions, old_logps, advantages, returns = inst
        if not _off_kink(values, means, log_std, actions, old_logps, advantages, clip_eps):
            continue
        checked += 1
        res = ppo_loss(values, means, log_std, actions, old_logps, advantages,
                       returns, clip_eps, value_coef, entropy_coef)

        def total(v, m, s):
            r = ppo_loss(v, m, s, actions, old_logps, advantages, returns,
                         clip_eps, value_coef, entropy_coef)
            return r.total

        for arr, grad in ((values, res.d_values), (means, res.d_means)):
            flat = arr.reshape(-1)
            for idx in rng.choice(flat.size, size=6, replace=False):
                orig = flat[idx]
                flat[idx] = orig + eps
                up = total(values, means, log_std)
                flat[idx] = orig - eps
                down = total(values, means, log_std)
                flat[idx] = orig
                fd = (up - down) / (2 * eps)
                an = grad.reshape(-1)[idx]
                assert abs(fd - an) < 1e-4 * max(1.0, abs(an)), (fd, an)
        for i in range(2):
            orig = log_std[i]
            log_std[i] = orig + eps
            up = total(values, means, log_std)
            log_std[i] = orig - eps
            down = total(values, means, log_std)
            log_std[i] = orig
            fd = (up - down) / (2 * eps)
            assert abs(fd - res.d_log_std[i]) < 1e-4 * max(1.0, abs(res.d_log_std[i]))


def test_identical_policy_has_unit_ratio():
    """Fresh from collection (same params) the ratio is exactly 1, the
    surrogate reduces to -mean(advantages), and nothing is clipped."""
    rng = np.random.default_rng(8)
    values, means, log_std, actions, _, advantages, returns = _random_instance(rng)
    old = gaussian_logp(actions, means, log_std)
    res = ppo_loss(values, means, log_std, actions, old, advantages, returns,
                   0.2, 0.5, 0.0)
    assert res.clip_frac == 0.0
    assert abs(res.policy_loss - (-float(np.mean(advantages)))) < 1e-12
    assert res.approx_kl == 0.0


def test_clip_frac_counts_clipped_ratios():
    values = np.zeros((1, 2))
    means = np.zeros((1, 2, 2))
    log_std = np.zeros(2)
    actions = np.array([[[0.5, 0.0], [0.0, 0.0]]])
    # old logp makes ratio huge for sample 0, exactly 1 for sample 1
    new = gaussian_logp(actions, means, log_std)
    old = new.copy()
    old[0, 0] -= 1.0  # ratio e^1 ~ 2.72, clipped at 1.2
    adv = np.ones((1, 2))
    res = ppo_loss(values, means, log_std, actions, old, adv, np.zeros((1, 2)),
                   0.2, 0.5, 0.0)
    assert res.clip_frac == 0.5


def test_value_loss_quadratic():
    values = np.array([[1.0, 3.0]])
    returns = np.array([[0.0, 0.0]])
    means = np.zeros((1, 2, 2))
    log_std = np.zeros(2)
    actions = np.zeros((1, 2, 2))
    old = gaussian_logp(actions, means, log_std)
    res = ppo_loss(values, means, log_std, actions, old, np.zeros((1, 2)), returns,
                   0.2, 0.5, 0.0)
    assert abs(res.value_loss - 5.0) < 1e-12  # mean(1, 9)
    np.testing.assert_allclose(res.d_values, 0.5 * (2.0 / 2) * values, atol=1e-12)
