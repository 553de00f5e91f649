from fractions import Fraction

import pytest

from dcprov.costs import (CostParams, beta_cost_params, cost_params_from_mapping,
                          default_cost_params, read_key_value, run_cost)


def test_defaults():
    c = default_cost_params()
    assert c.run_cost_per_base_slot == 7 / 120
    assert c.switch_on_total == pytest.approx(0.32)
    assert c.switch_off_total == pytest.approx(0.22)
    assert run_cost() == pytest.approx(7 / 120)


def test_beta_half_equals_defaults():
    assert beta_cost_params(0.5) == default_cost_params()
    exact = beta_cost_params(Fraction(1, 2))
    assert exact.switch_on_total == Fraction(8, 25)
    assert exact.switch_off_total == Fraction(11, 50)
    assert exact.run_cost_per_base_slot == Fraction(7, 120)


@pytest.mark.parametrize("beta", [0.0, 0.3, 1.0])
def test_beta_totals(beta):
    c = beta_cost_params(beta)
    assert c.switch_on_total == pytest.approx(0.6 - 0.56 * beta)
    assert c.switch_off_total == pytest.approx(0.4 - 0.36 * beta)
    assert c.run_cost_per_base_slot == pytest.approx(beta * 7 / 60)


def test_beta_range():
    with pytest.raises(ValueError):
        beta_cost_params(1.5)
    with pytest.raises(ValueError):
        CostParams(switch_on_wear=-0.1)


def test_exact_makes_sums_agree():
    c = default_cost_params().exact()
    assert c.switch_on_wear + c.switch_on_power == Fraction(8, 25)
    assert c.run_cost_per_base_slot == Fraction(7, 120)


def test_config_file(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# costs\nbeta = 0.25\nswitch_on_wear = 1.0  # override\n\n")
    kv = read_key_value(path)
    assert kv == {"beta": "0.25", "switch_on_wear": "1.0"}
    c = cost_params_from_mapping(kv)
    assert c.switch_on_wear == 1.0
    assert c.run_cost_per_base_slot == pytest.approx(0.25 * 7 / 60)
    path.write_text("no equals sign\n")
    with pytest.raises(ValueError, match=":1:"):
        read_key_value(path)
