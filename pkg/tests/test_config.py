import numpy as np
import pytest

from ksdg import (ConfigError, PRESET_NAMES, RunConfig, build_structured_mesh,
                  dumps_config, evaluate_terms, initial_fields,
                  integrate_cellfield, load_config, preset_initial_conditions)
from ksdg.config import (CosCosTerm, GaussianTerm, SinSinTerm, format_terms,
                         parse_terms)


class TestParsing:
    def test_empty_config_gives_model_defaults(self):
        cfg = load_config("")
        p = cfg.params
        assert (p.k0, p.k1, p.k2, p.k3, p.k4) == (1, 1, 1, 1, 1)
        assert p.tau == 1 and p.eps == 1e-10
        assert cfg.domain == (-0.5, 0.5, -0.5, 0.5)
        assert cfg.flux == "truncated"

    def test_preset_only_config(self):
        cfg = load_config("[initial]\npreset = one_bulge\n")
        assert cfg.preset == "one_bulge"
        assert cfg.params.tau == 1
        assert cfg.params.dt == 1e-6 and cfg.params.t_end == 1e-4
        assert len(cfg.u0_terms) == 1 and len(cfg.v0_terms) == 1
        assert (cfg.params.k0, cfg.params.eps) == (1.0, 1e-10)

    def test_three_bulges_selects_elliptic_equation(self):
        cfg = load_config("[initial]\npreset = three_bulges\n")
        assert cfg.params.tau == 0
        assert cfg.params.dt == 1e-5
        assert len(cfg.u0_terms) == 3 and cfg.v0_terms == ()

    def test_explicit_keys_override_preset(self):
        cfg = load_config(
            "[initial]\npreset = one_bulge\n[params]\nt_end = 1e-5\n")
        assert cfg.params.t_end == 1e-5
        assert cfg.params.dt == 1e-6

    def test_tau_two_rejected_with_line(self):
        with pytest.raises(ConfigError, match="tau"):
            load_config("[params]\ntau = 2\n")

    def test_unknown_key_reports_line_number(self):
        text = "[mesh]\npattern = mesh1\nwavelength = 3\n"
        with pytest.raises(ConfigError, match="line 3"):
            load_config(text)

    def test_unknown_section_reports_line_number(self):
        with pytest.raises(ConfigError, match="line 1"):
            load_config("[solver]\n")

    def test_type_error_reports_line_number(self):
        with pytest.raises(ConfigError, match="line 2"):
            load_config("[mesh]\nn = many\n")

    def test_key_outside_section_rejected(self):
        with pytest.raises(ConfigError, match="section"):
            load_config("n = 4\n")

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError, match="unknown preset"):
            load_config("[initial]\npreset = four_bulges\n")

    def test_snapshot_times_must_fit_horizon(self):
        text = ("[params]\nt_end = 1e-5\n"
                "[output]\nsnapshot_times = 0 1e-3\n")
        with pytest.raises(ConfigError, match="snapshot"):
            load_config(text)

    def test_bad_flux_rejected(self):
        with pytest.raises(ConfigError, match="flux"):
            load_config("[scheme]\nflux = upstream\n")

    def test_comments_and_blank_lines_ignored(self):
        cfg = load_config("# header\n\n[mesh]\nn = 8  # squares\n")
        assert cfg.n == 8

    def test_newton_settings_parsed(self):
        cfg = load_config("[newton]\ntol_residual = 1e-8\nmax_iters = 12\n"
                          "damping = none\n")
        assert cfg.newton.tol_residual == 1e-8
        assert cfg.newton.max_iters == 12
        assert cfg.newton.damping == "none"

    def test_direct_construction_validates(self):
        with pytest.raises(ConfigError):
            RunConfig(pattern="hexes")
        with pytest.raises(ConfigError):
            RunConfig(snapshot_times=(2.0,))


class TestRoundTrip:
    @pytest.mark.parametrize("text", [
        "",
        "[initial]\npreset = one_bulge\n",
        "[initial]\npreset = three_bulges\n[mesh]\nn = 32\n",
        ("[mesh]\npattern = mesh2\nn = 12\ndomain = 0 2 0 1\n"
         "[params]\nk0 = 0.5\ntau = 0\ndt = 1e-4\nt_end = 2e-3\n"
         "[initial]\nu0 = gaussian(5, 20, 0.5, 0.5) + coscos(1, 2)\n"
         "[output]\ncsv = out.csv\nsnapshot_times = 0 1e-3\n"
         "[newton]\nmax_iters = 11\n[scheme]\nflux = non_truncated\n"),
    ])
    def test_serialize_parse_identity(self, text):
        cfg = load_config(text)
        assert load_config(dumps_config(cfg)) == cfg


class TestTerms:
    def test_parse_sum(self):
        terms = parse_terms("gaussian(1, 2, 0, 0) + sinsin(3, 4)")
        assert terms == (GaussianTerm(1, 2, 0, 0), SinSinTerm(3, 4))

    def test_zero_keyword(self):
        assert parse_terms("zero") == ()

    def test_format_parse_identity(self):
        terms = (CosCosTerm(1000.0, 2.0), GaussianTerm(1.5, 2.5, -0.25, 0.125))
        assert parse_terms(format_terms(terms)) == terms

    def test_bad_arity_rejected(self):
        with pytest.raises(ConfigError, match="arguments"):
            parse_terms("gaussian(1, 2)")

    def test_unknown_name_rejected(self):
        with pytest.raises(ConfigError, match="unknown"):
            parse_terms("ripple(1, 2)")

    def test_gibberish_rejected(self):
        with pytest.raises(ConfigError, match="cannot parse"):
            parse_terms("gaussian(1,2,3,4) + 7")

    def test_evaluate_sum_of_gaussians(self):
        terms = parse_terms("gaussian(2, 1, 0, 0) + gaussian(3, 1, 1, 0)")
        got = evaluate_terms(terms, 0.0, 0.0)
        assert got == pytest.approx(2.0 + 3.0 * np.exp(-1.0))


class TestPresets:
    def test_names(self):
        assert PRESET_NAMES == ("one_bulge", "three_bulges", "multi_peak")

    def test_one_bulge_peak_values(self):
        cfg = load_config("[initial]\npreset = one_bulge\n")
        assert evaluate_terms(cfg.u0_terms, 0.0, 0.0) == pytest.approx(1000.0)
        assert evaluate_terms(cfg.v0_terms, 0.0, 0.0) == pytest.approx(500.0)

    def test_multi_peak_formula_value(self):
        cfg = load_config("[initial]\npreset = multi_peak\n")
        # cos(pi/2) = 0 at x = y = 1/4, leaving the constant offset
        assert evaluate_terms(cfg.u0_terms, 0.25, 0.25) == pytest.approx(
            1000.0)
        assert evaluate_terms(cfg.u0_terms, 0.0, 0.0) == pytest.approx(2000.0)

    def test_three_bulges_attractant_warns_and_zeroes(self):
        mesh = build_structured_mesh("mesh1", 4)
        with pytest.warns(UserWarning, match="zero"):
            u0, v0 = preset_initial_conditions("three_bulges", mesh)
        assert np.all(v0 == 0.0)
        assert np.min(u0) >= 0.0

    def test_preset_fields_sampled_on_mesh(self):
        mesh = build_structured_mesh("mesh1", 4)
        u0, v0 = preset_initial_conditions("one_bulge", mesh)
        assert u0.shape == (mesh.n_cells,)
        assert v0.shape == (mesh.n_vertices,)
        want = 1000.0 * np.exp(-100.0 * (mesh.barycenters[:, 0] ** 2
                                         + mesh.barycenters[:, 1] ** 2))
        assert np.allclose(u0, want, rtol=1e-14)

    def test_unknown_preset_name(self):
        mesh = build_structured_mesh("mesh1", 4)
        with pytest.raises(ConfigError, match="unknown preset"):
            preset_initial_conditions("bulge", mesh)

    @pytest.mark.parametrize("n_coarse,n_fine", [(32, 64)])
    def test_bulge_mass_converges_to_analytic_integral(self, n_coarse,
                                                       n_fine):
        # the sampled bulge integrates to 10*pi in the refinement limit
        analytic = 10.0 * np.pi
        masses = {}
        for n in (n_coarse, n_fine):
            mesh = build_structured_mesh("mesh1", n)
            cfg = load_config("[initial]\npreset = one_bulge\n")
            u0, _ = initial_fields(cfg, mesh)
            masses[n] = integrate_cellfield(mesh, u0)
        for n, mass in masses.items():
            assert abs(mass - analytic) / analytic < 0.01
        assert abs(masses[n_fine] - masses[n_coarse]) / analytic < 0.01

    def test_initial_fields_elliptic_ignores_attractant_terms(self):
        mesh = build_structured_mesh("mesh1", 4)
        cfg = load_config("[params]\ntau = 0\n"
                          "[initial]\nv0 = gaussian(5, 1, 0, 0)\n")
        with pytest.warns(UserWarning, match="ignoring"):
            _, v0 = initial_fields(cfg, mesh)
        assert np.all(v0 == 0.0)
