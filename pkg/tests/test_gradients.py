"""Fast finite-difference checks; the acceptance suite runs the full sweep."""

import pytest
import torch

from gradcheck_utils import build_micro_setting, check_gradients, setting_is_live


@pytest.mark.parametrize("seed", [2, 3, 5])
def test_analytic_gradients_match_finite_differences(seed):
    setting = build_micro_setting(seed)
    assert setting_is_live(setting), f"seed {seed} builds a degenerate setting"
    failures = check_gradients(setting, max_entries_per_tensor=10, rng_seed=seed)
    assert not failures, "\n".join(failures[:20])


def test_gradients_cover_every_parameter_group():
    setting = build_micro_setting(2)
    loss = setting.loss_fn()
    setting.model.zero_grad()
    loss.backward()
    missing = [name for name, p in setting.named_parameters() if p.grad is None]
    assert not missing, f"parameters with no gradient: {missing}"


def test_influence_truncation_boundary():
    """The state carried into an interval is a constant for gradients: a
    detached prior state receives no gradient even though the interval's own
    computation does."""
    setting = build_micro_setting(2)
    model = setting.model
    prior = model.initial_state(-1)
    news = torch.randint(0, model.config.vocab_size, (1, model.config.max_len_news))
    state = model.aggregate_interval(prior, news, None, None, 0)
    assert state.news_hidden.requires_grad
    assert not prior.news_hidden.requires_grad
    assert state.detached().news_hidden.requires_grad is False
