import pytest

from uavbeam.config import (AssociationConfig, SimConfig, Variant, canonical_solver, full_scale_config,
                            sweep_variants)


def test_defaults():
    cfg = SimConfig()
    assert cfg.trials == 200 and cfg.scenario.K == 10
    assert cfg.f_c == pytest.approx(28e9)
    assert full_scale_config().trials == 2000


def test_yaml_round_trip(tmp_path):
    cfg = SimConfig(trials=7, seed=9).replace(
        association=AssociationConfig(primary=Variant("ed", "static", "hungarian"),
                                      variants=(Variant("emd", "velocity", "auction"),)))
    path = tmp_path / "c.yaml"
    cfg.dump(path)
    assert SimConfig.load(path) == cfg


def test_partial_yaml_uses_defaults(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("trials: 3\nscenario:\n  K: 4\nassociation:\n  primary: md/position/km\n")
    cfg = SimConfig.load(path)
    assert cfg.trials == 3 and cfg.scenario.K == 4
    assert cfg.association.primary == Variant("md", "position", "hungarian")
    assert cfg.radar == SimConfig().radar
    path.write_text("")
    assert SimConfig.load(path) == SimConfig()


@pytest.mark.parametrize("text", ["trails: 3\n", "scenario:\n  k: 4\n", "- 1\n", "trials: 0\n",
                                  "association:\n  primary: md/dynamic\n", "ia:\n  scheme: random\n"])
def test_bad_configs_rejected(tmp_path, text):
    path = tmp_path / "c.yaml"
    path.write_text(text)
    with pytest.raises(ValueError):
        SimConfig.load(path)


def test_solver_aliases_and_variants():
    assert canonical_solver("brute") == "bruteforce"
    assert canonical_solver("km") == "hungarian"
    assert canonical_solver("matchpairs") == "scipy"
    with pytest.raises(ValueError):
        canonical_solver("simplex")
    assert Variant.parse("md/dynamic/brute").label == "md/dynamic/bruteforce"
    with pytest.raises(ValueError):
        Variant("cosine")
    assert len(sweep_variants()) == 3 * 4 * 5
    ac = AssociationConfig(variants=(Variant(), Variant("ed")))
    assert ac.all_variants == (Variant(), Variant("ed"))
