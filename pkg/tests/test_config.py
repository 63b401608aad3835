import json

import numpy as np
import pytest

from wentzell.config import RunConfig, config_from_dict, parse_config, sample_field
from wentzell.errors import ConfigurationError, ConstraintError
from wentzell.geometry import GeometryKind, GeometrySpec, build_geometry
from wentzell.operator import ExponentConvention, Realization

MINIMAL = {"geometry": {"kind": "Interval"}, "time": {"T": 1.0, "dt": 0.01}}


def with_(**sections):
    data = json.loads(json.dumps(MINIMAL))
    for k, v in sections.items():
        data[k] = v
    return data


def test_minimal_config_fills_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(MINIMAL), encoding="utf-8")
    cfg = parse_config(p)
    f = cfg.fractional_params()
    assert (f.theta, f.alpha, f.omega) == (0.5, 1.0, 1.0)
    assert f.realization is Realization.BLOCK_R2
    assert f.exponent_convention is ExponentConvention.THETA
    assert cfg.schema_version == 1 and cfg.time.sample_stride == 1


def test_theta_out_of_range():
    with pytest.raises(ConfigurationError) as err:
        config_from_dict(with_(fractional={"theta": 0.3}))
    assert err.value.field == "fractional.theta"
    assert "[1/2, 1]" in str(err.value)


def test_epsilon_equal_omega_is_constraint_error():
    with pytest.raises(ConstraintError) as err:
        config_from_dict(with_(fractional={"omega": 0.5}, nonlinearity={"epsilon": 0.5}))
    assert "ε ∈ (0, ω)" in str(err.value)


@pytest.mark.parametrize("data,field", [
    ({"geometry": {"kind": "Interval"}}, "time"),
    (with_(time={"T": 1.0}), "time.dt"),
    (with_(geometry={"kind": "Sphere"}), "geometry.kind"),
    (with_(geometry={"bulk_elements": 1}), "geometry.bulk_elements"),
    (with_(geometry={"kind": "PeriodicSlab", "periodic_points": 12}), "geometry.periodic_points"),
    (with_(initial_data={"u0": [{"type": "cos", "amplitude": "big"}]}), "initial_data.u0.0.amplitude"),
    (with_(initial_data={"u0": [{"type": "triangle"}]}), "initial_data.u0.0"),
    (with_(nonlinearity={"f_terms": [{"coef": 1, "power": 1}]}), "nonlinearity.f_terms.0.power"),
    (with_(checks={"bogus": True}), "checks.bogus"),
    (with_(schema_version=2), "schema_version"),
    (with_(seed=-1), "seed"),
])
def test_invalid_field_is_named(data, field):
    with pytest.raises(ConfigurationError) as err:
        config_from_dict(data)
    assert err.value.field == field


@pytest.mark.parametrize("time,msg", [({"T": 1.0, "dt": 1.0}, "dt < T"), ({"T": 1.0, "dt": 0.3}, "T / dt")])
def test_time_constraints(time, msg):
    with pytest.raises(ConstraintError) as err:
        config_from_dict(with_(time=time))
    assert msg in str(err.value)


def test_r1_requires_unit_alpha():
    with pytest.raises(ConstraintError):
        config_from_dict(with_(fractional={"realization": "SpectralR1", "alpha": 0.5}))


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ConfigurationError):
        parse_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigurationError):
        parse_config(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigurationError) as err:
        parse_config(arr)
    assert err.value.field == "<root>"


def test_digest_tracks_semantic_fields():
    base = config_from_dict(MINIMAL).digest()
    assert config_from_dict(MINIMAL).digest() == base
    assert config_from_dict(with_(output="elsewhere")).digest() == base
    # an explicit default is the same configuration
    assert config_from_dict(with_(fractional={"theta": 0.5})).digest() == base
    changed = [
        with_(fractional={"theta": 0.6}),
        with_(time={"T": 1.0, "dt": 0.005}),
        with_(seed=1),
        with_(geometry={"kind": "Interval", "bulk_elements": 17}),
        with_(nonlinearity={"g_terms": [{"coef": -0.1, "power": 2}]}),
        with_(checks={"balance": True}),
    ]
    digests = {config_from_dict(d).digest() for d in changed}
    assert base not in digests and len(digests) == len(changed)


def test_domain_conversion():
    cfg = config_from_dict(with_(nonlinearity={"f_terms": [{"coef": 2, "power": 4}],
                                               "g_sines": [{"coef": 0.1, "wavenumber": 3}],
                                               "epsilon": 0.25}))
    spec = cfg.nonlinearity_spec()
    assert spec.r1 == 4 and spec.c_f == 2 and spec.epsilon == 0.25
    assert len(spec.g_sines) == 1
    assert isinstance(cfg.geometry_spec(), GeometrySpec)


def test_sample_field_terms():
    mesh = build_geometry(GeometrySpec(GeometryKind.PERIODIC_SLAB, 1.0, 2 * np.pi, 4, 8))
    cfg = RunConfig.model_validate(with_(initial_data={"u0": [
        {"type": "constant", "value": 1.0},
        {"type": "cos", "amplitude": 2.0, "wavenumber": 1},
        {"type": "cos", "amplitude": 0.5, "wavenumber": 2, "axis": "periodic"},
    ]}))
    u = sample_field(cfg.initial_data.u0, mesh)
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    assert np.allclose(u, 1 + 2 * np.cos(np.pi * y) + 0.5 * np.cos(2 * x))
    b = sample_field(cfg.initial_data.u0, mesh, boundary=True)
    assert np.allclose(b, u[mesh.boundary_nodes])


def test_sample_field_errors():
    mesh = build_geometry(GeometrySpec())
    cfg = RunConfig.model_validate(with_(initial_data={"u0": [{"type": "cos", "amplitude": 1, "axis": "periodic"}],
                                                       "v0": [{"type": "mode", "index": 3, "amplitude": 1}]}))
    with pytest.raises(ConfigurationError):
        sample_field(cfg.initial_data.u0, mesh)
    with pytest.raises(ConfigurationError):
        sample_field(cfg.initial_data.v0, mesh)
    with pytest.raises(ConfigurationError):
        sample_field(cfg.initial_data.v0, mesh, eigvecs=np.eye(mesh.n_nodes)[:, :2])
