"""Command line driver: every verification suite with JSON reports.

Each check is registered with a stable id, a descriptive anchor naming the
identity it tests, a tolerance and a callable returning a residual. Exact
checks return 0.0 (holds) or 1.0 (fails) against tolerance 0.5. A check passes
iff residual < tolerance, so --tol 0 fails every check by design.
"""
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import click
import numpy as np

from . import assoc_monodromy as am
from . import cherednik as ch
from . import kzb_connection as kc
from . import lie_core as lc
from . import realizations as rz
from . import special_fn as sf

SCHEMA = "ukzb-report/1"
EXACT_TOL = 0.5
SUITES = ("verify-theta", "verify-flatness", "associator", "verify-elliptic", "monodromy",
          "verify-realization", "cherednik-characters", "daha-check")


@dataclass
class RunConfig:
    suite: str
    seed: int = 0
    quick: bool = False
    tol: float = None
    samples: int = None
    workers: int = 1
    output: str = None

    def n_samples(self, full, quick):
        if self.samples is not None:
            return self.samples
        return quick if self.quick else full


@dataclass
class Check:
    suite: str
    id: str
    anchor: str
    tolerance: float
    fn: object
    experimental: bool = False


@dataclass
class Record:
    id: str
    anchor: str
    residual: float
    tolerance: float
    passed: bool
    experimental: bool = False
    error: str = None
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        d = {"id": self.id, "anchor": self.anchor, "residual": _sci(self.residual),
             "tolerance": self.tolerance, "pass": self.passed}
        if self.experimental:
            d["experimental"] = True
        if self.error:
            d["error"] = self.error
        return d


def _sci(x):
    if x is None or not math.isfinite(x):
        return None if x is None else str(x)
    return float("%.2e" % x)


def _exact(ok):
    return 0.0 if ok else 1.0


REGISTRY = []


def check(suite, cid, anchor, tol=EXACT_TOL, experimental=False):
    def deco(fn):
        REGISTRY.append(Check(suite, cid, anchor, tol, fn, experimental))
        return fn
    return deco


# ------------------------------------------------------------- shared data

@lru_cache(maxsize=None)
def _phi(D, lam=am.TWO_PI_I):
    return am.kz_associator(D, lam=lam)


@lru_cache(maxsize=None)
def _pair(D, lam=am.TWO_PI_I):
    return am.EllipticPair(_phi(D, lam), lam, D)


@lru_cache(maxsize=None)
def _gamma13(D, lam=am.TWO_PI_I):
    return am.check_gamma13(_pair(D, lam))


@lru_cache(maxsize=None)
def _gamma_images(D):
    return am.gamma_images(_pair(D))[2]


@lru_cache(maxsize=None)
def _monodromy(D, quick):
    return am.monodromy_AB(tau=1.8j, D=D)


@lru_cache(maxsize=None)
def _connection(n, D):
    return kc.connection_algebra(n, D)


@lru_cache(maxsize=None)
def _flatness(n, D, samples, seed):
    CA = _connection(n, D)
    rng = np.random.default_rng(seed)
    worst = [0.0, 0.0, 0.0]
    for _ in range(samples):
        p = kc.sample_point(rng, n)
        r1, r2 = kc.tau_flatness_residual(p, CA)
        worst = [max(worst[0], kc.flatness_residual(p, CA)), max(worst[1], r1), max(worst[2], r2)]
    return worst


@lru_cache(maxsize=None)
def _pres_change(n, D):
    return lc.presentation_change_report(n, D)


@lru_cache(maxsize=None)
def _delta_suite(n, D, ms):
    return lc.delta_suite(n, D, ms)


@lru_cache(maxsize=None)
def _poly_module(N, n, cut):
    return rz.PolynomialModule(N, n, cut)


@lru_cache(maxsize=None)
def _reduced(seed, samples):
    rng = np.random.default_rng(seed)
    worst = [0.0, 0.0]
    for n in (2, 4):
        for _ in range(samples):
            z, tau, c0 = rz.sample_reduced_point(rng, n)
            rc = rz.ReducedConnection(z, tau, c0, n=n)
            worst[0] = max(worst[0], rc.flatness_residual())
            worst[1] = max(worst[1], max(rc.conjugation_residuals().values()))
    return worst


def _random_lambda(rng, N):
    return list(rng.uniform(-1.5, 1.5, N - 1))


@lru_cache(maxsize=None)
def _lc_module():
    return ch.lowest_weight_module((3,), 3, Fraction(2, 3), 6)


@lru_cache(maxsize=None)
def _V2(n, cut):
    return ch.build_VN(n, 2, cut)


@lru_cache(maxsize=None)
def _hecke():
    return ch.daha_hecke_check()


@lru_cache(maxsize=None)
def _xi_rep():
    return ch.xi_realization(2, 5, Fraction(1, 100), Fraction(1, 100))


@lru_cache(maxsize=None)
def _theta():
    return am.theta_tilde_in_rep(_xi_rep(), pair=_pair(4))


def _D(cfg, full=4):
    return 3 if cfg.quick else full


# ------------------------------------------------------------ verify-theta

_THETA_ANCHORS = {
    "fay": "Fay-type identity for k and the six-term k identity",
    "triple_theta": "triple theta product identity",
    "k_modularity": "modularity and lattice shifts of k(z,x|tau)",
    "g_modularity": "lattice shifts of g(z,x|tau)",
    "H_vanishing": "vanishing of H(z,z',u,v)",
    "heat": "heat equation for theta",
    "L_vanishing": "vanishing of L(z,u,v)",
}

for _name in sf.SCALAR_IDENTITIES:
    def _mk(name):
        def fn(cfg):
            return sf.check_scalar_identity(name, samples=cfg.n_samples(20, 5), seed=cfg.seed)
        return fn
    check("verify-theta", "theta." + _name, _THETA_ANCHORS[_name], 1e-9)(_mk(_name))


@check("verify-theta", "theta.E4_modularity", "E_4(-1/tau) = tau^4 E_4(tau)", 1e-10)
def _e4(cfg):
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(cfg.n_samples(10, 3)):
        tau = sf.sample_tau(rng, (0.8, 1.3))
        worst = max(worst, abs(sf.eisenstein(4, -1 / tau) - tau ** 4 * sf.eisenstein(4, tau)))
    return worst


@check("verify-theta", "theta.E2_anomaly", "E_2(-1/tau) = tau^2 E_2(tau) - (6i/pi) tau", 1e-10)
def _e2(cfg):
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(cfg.n_samples(10, 3)):
        tau = sf.sample_tau(rng, (0.8, 1.3))
        lhs = sf.eisenstein(2, -1 / tau)
        worst = max(worst, abs(lhs - tau ** 2 * sf.eisenstein(2, tau) + 6j / math.pi * tau))
    return worst


# --------------------------------------------------------- verify-flatness

@check("verify-flatness", "lie.witt_tbar12", "tbar_{1,2} graded dimensions equal free-Lie Witt numbers")
def _witt(cfg):
    alg = lc.TruncatedLieAlgebra(lc.tbar1n_presentation(2), 5)
    return _exact(list(alg.dims_list()) == [lc.witt_dimension(2, d) for d in range(1, 6)])


for _n, _Dp in ((2, 5), (3, 4)):
    def _mk(n, D):
        def fn(cfg):
            return _exact(all(_pres_change(n, D).values()))
        return fn
    check("verify-flatness", "lie.presentations_n%d" % _n,
          "presentations (A) and (B) of t_{1,%d} carried to each other" % _n)(_mk(_n, _Dp))


for _n, _Dp, _ms in ((2, 5, (1, 2)), (3, 5, (1, 2)), (3, 6, (1,))):
    def _mk(n, D, ms):
        def fn(cfg):
            return _exact(all(_delta_suite(n, D, ms)[0].values()))
        return fn
    check("verify-flatness", "lie.delta_n%d_D%d" % (_n, _Dp),
          "delta~_2m well defined on tbar_{1,%d} and ad(Delta0~)^{2m+1} delta~_2m = 0" % _n
          )(_mk(_n, _Dp, _ms))


for _n in (2, 3):
    def _mk_sum(n):
        def fn(cfg):
            return _exact(kc.sum_K_exact(_connection(n, _D(cfg))))
        return fn

    def _mk_flat(n, which):
        def fn(cfg):
            return _flatness(n, _D(cfg), cfg.n_samples(10, 3), cfg.seed)[which]
        return fn
    check("verify-flatness", "kzb.sum_K_n%d" % _n, "sum_i K_i = 0 in tbar_{1,%d}" % _n)(_mk_sum(_n))
    check("verify-flatness", "kzb.flat_zz_n%d" % _n, "[d_i - K_i, d_j - K_j] = 0", 1e-8)(_mk_flat(_n, 0))
    check("verify-flatness", "kzb.flat_tau_z_n%d" % _n, "dK_i/dtau = dDelta/dz_i", 1e-8)(_mk_flat(_n, 1))
    check("verify-flatness", "kzb.flat_Delta_K_n%d" % _n, "[Delta, K_i] = 0", 1e-8)(_mk_flat(_n, 2))


@lru_cache(maxsize=None)
def _modular(n, samples, seed):
    R = ch.xi_realization(*((2, 5) if n == 2 else (3, 4)), Fraction(1), Fraction(1))
    rng = np.random.default_rng(seed)
    worst = {"mod_K": 0.0, "mod_Delta": 0.0}
    for _ in range(samples):
        p = kc.sample_point(rng, n, im_range=(0.8, 1.3))
        for kind in worst:
            worst[kind] = max(worst[kind], kc.equivariance_residual(p, None, kind, realization=R))
    return worst


for _n in (2, 3):
    for _kind, _anc in (("mod_K", "(1/tau) K_i(z/tau|-1/tau) = Ad(c_T) K_i + 2 pi i x_i"),
                        ("mod_Delta", "(1/tau^2) Delta(z/tau|-1/tau) = Ad(c_T)(Delta + sum z_i K_i/tau) + d/tau - 2 pi i X")):
        def _mk(n, kind):
            def fn(cfg):
                return _modular(n, cfg.n_samples(5, 2), cfg.seed)[kind]
            return fn
        check("verify-flatness", "kzb.%s_n%d" % (_kind, _n), _anc + " in a Cherednik realization", 1e-7)(
            _mk(_n, _kind))


# ---------------------------------------------------------------- associator

@check("associator", "assoc.duality", "Phi(a,b) Phi(b,a) = 1", 1e-8)
def _dual(cfg):
    return am.duality_residual(_phi(4))


@check("associator", "assoc.hexagon", "hexagon relation for Phi_KZ", 1e-8)
def _hex(cfg):
    return am.hexagon_residual(_phi(4))


@check("associator", "assoc.pentagon", "pentagon relation for Phi_KZ", 1e-8)
def _pent(cfg):
    return am.pentagon_residual(_phi(4))


@check("associator", "assoc.degree2_picard", "degree-2 coefficients agree with a Picard quadrature oracle", 1e-9)
def _deg2(cfg):
    p1 = am.kz_associator(2, lam=1)
    ab, ba = am.picard_degree2(1)
    return max(abs(p1.coefficient("ab") - ab), abs(p1.coefficient("ba") - ba))


@check("associator", "assoc.degree2_value", "|degree-2 coefficient| = 1/24 at lambda = 1", 1e-9)
def _deg2v(cfg):
    return abs(abs(am.kz_associator(2, lam=1).coefficient("ab")) - 1 / 24)


@check("associator", "assoc.zeta2", "degree-2 coefficient at lambda = 2 pi i has modulus zeta(2)", 1e-9)
def _zeta2(cfg):
    return abs(abs(_phi(4).coefficient("ab")) - math.pi ** 2 / 6)


# --------------------------------------------------------- verify-elliptic

_GENERIC_LAMBDA = 0.7 + 1.3j

for _lam, _tag in ((am.TWO_PI_I, "2pii"), (_GENERIC_LAMBDA, "generic")):
    def _mk_pair(lam, attr):
        def fn(cfg):
            return getattr(_pair(4, lam), attr)()
        return fn

    def _mk_g13(lam, key):
        def fn(cfg):
            return _gamma13(4, lam)[key]
        return fn
    check("verify-elliptic", "ell.commutator_%s" % _tag, "(A~, B~) = exp(-lambda t_12)", 1e-7)(
        _mk_pair(_lam, "commutator_residual"))
    check("verify-elliptic", "ell.A_forms_%s" % _tag, "two expressions for A~ agree (hexagon)", 1e-7)(
        _mk_pair(_lam, "A_forms_residual"))
    for _key, _anc in (("A_identity", "A~^{12,3} identity"), ("B_identity", "B~^{12,3} identity"),
                       ("mixed_left", "mixed commutator identity, left form"),
                       ("mixed_right", "mixed commutator identity, right form")):
        check("verify-elliptic", "ell.%s_%s" % (_key, _tag), _anc, 1e-7)(_mk_g13(_lam, _key))


@check("verify-elliptic", "ell.empty_block", "A~ and B~ project to 1 when a block is empty", 1e-12)
def _empty(cfg):
    return _pair(4).empty_block_residual()


for _key in ("(A2,A3)=1", "(B2,B3)=1", "(B2,A2)=C12", "(B3,A3A2^-1)=C23", "C12C23=exp(lam sum t)", "braid"):
    def _mk(key):
        def fn(cfg):
            return _gamma_images(4)[key]
        return fn
    check("verify-elliptic", "ell.images." + _key, "relation of the images of A_i, B_i, C_jk, sigma_i: " + _key,
          1e-7)(_mk(_key))


@check("verify-elliptic", "ell.psi_fixes_A", "[Psi~] e^{lambda t/12} fixes A~ in the xi realization", 1e-6)
def _psiA(cfg):
    return am.psi_conjugation_residual(_pair(4), _xi_rep())[0]


@check("verify-elliptic", "ell.psi_B_to_BA", "[Psi~] e^{lambda t/12} sends B~ to B~A~ in the xi realization", 1e-6)
def _psiB(cfg):
    return am.psi_conjugation_residual(_pair(4), _xi_rep())[1]


for _key in ("Theta^4 = 1", "(Theta Psi)^3 = 1", "(Theta^2, Psi) = 1", "[Theta] A~ = B~^-1",
             "[Theta] B~ = B~ A~ B~^-1"):
    def _mk(key):
        def fn(cfg):
            return _theta().residuals[key]
        return fn
    check("verify-elliptic", "ell.theta." + _key, "modular relation " + _key + " in a Cherednik realization",
          1e-3, experimental=True)(_mk(_key))


# ---------------------------------------------------------------- monodromy

for _key, _anc in (("A_residual", "numerical A~ equals the associator formula"),
                   ("B_residual", "numerical B~ equals the associator formula"),
                   ("sigma_residual", "half-turn monodromy equals e^{i pi t_12}"),
                   ("loop_residual", "full loop monodromy equals e^{2 pi i t_12}")):
    def _mk(key):
        def fn(cfg):
            return getattr(_monodromy(3, cfg.quick), key)
        return fn
    check("monodromy", "mono." + _key[:-9], _anc, 1e-5)(_mk(_key))


# ------------------------------------------------------- verify-realization

@check("verify-realization", "real.rho_g", "rho_g is a morphism on (C[sl2]_{<=3} (x) (C^2)^{(x)2})^g")
def _rhog(cfg):
    return _exact(rz.check_rho_g(module=_poly_module(2, 2, 3)).ok)


@check("verify-realization", "real.rho_d", "rho on d respects its relations and the action on tbar")
def _rhod(cfg):
    return _exact(rz.check_rho_d(module=_poly_module(2, 2, 5)).ok)


for _N in (2, 3):
    def _mk(N, fn_):
        def fn(cfg):
            rng = np.random.default_rng(cfg.seed + N)
            return max(fn_(_random_lambda(rng, N), N) for _ in range(cfg.n_samples(5, 2)))
        return fn
    check("verify-realization", "real.cdybe_N%d" % _N, "classical dynamical Yang-Baxter equation for r(lambda)",
          1e-10)(_mk(_N, rz.cdybe_residual))
    check("verify-realization", "real.lemma_logP_N%d" % _N, "reduced-connection lemma on d log P", 1e-10)(
        _mk(_N, rz.lemma_logP_residual))
    check("verify-realization", "real.lemma_laplace_N%d" % _N, "reduced-connection lemma on the Laplacian",
          1e-10)(_mk(_N, rz.lemma_laplace_residual))


@check("verify-realization", "real.reduced_relations", "reduced realization respects the tbar relations")
def _redrel(cfg):
    return _exact(rz.ReducedRealization(2, 2).check_relations(seed=cfg.seed).ok)


@check("verify-realization", "real.reduced_flatness", "flatness of the reduced connection", 1e-7)
def _redflat(cfg):
    return _reduced(cfg.seed, cfg.n_samples(3, 1))[0]


@check("verify-realization", "real.reduced_conjugation", "reduced connection equals the conjugated one", 1e-10)
def _redconj(cfg):
    return _reduced(cfg.seed, cfg.n_samples(3, 1))[1]


# ---------------------------------------------------- cherednik-characters

@check("cherednik-characters", "cher.sign_convention", "Dunkl sign convention is the unique consistent one")
def _signs(cfg):
    return _exact(ch.find_sign_convention() == [ch.DUNKL_SIGNS])


for _n, _cut in ((2, 6), (3, 5), (4, 6)):
    def _mk(n, cut):
        def fn(cfg):
            c = min(cut, 4) if cfg.quick else cut
            M = ch.dunkl_module(n, Fraction(1, 3), c, check=False)
            return _exact(ch.check_cherednik_relations(M).ok)
        return fn
    check("cherednik-characters", "cher.H%d_relations" % _n, "H_%d(k) relations on the Dunkl module" % _n)(
        _mk(_n, _cut))


for _n, _cut, _mmax in ((2, 6, 2), (3, 5, 1)):
    def _mk(n, cut, mmax):
        def fn(cfg):
            M = ch.dunkl_module(n, Fraction(2, 7), cut, check=False)
            return _exact(all(ch.check_xi(M, a, b, mmax).ok
                              for a, b in ((Fraction(1), Fraction(1)), (Fraction(2, 3), Fraction(-5, 7)))))
        return fn
    check("cherednik-characters", "cher.xi_n%d" % _n,
          "xi_{a,b} and its modular extension to d are morphisms (n = %d)" % _n)(_mk(_n, _cut, _mmax))


@check("cherednik-characters", "cher.eulh_V2", "sl2 triple (E, H, F) on V_2 and power sums of X")
def _eulh(cfg):
    return _exact(ch.eulh_report(_V2(2, 8)).ok and ch.check_cherednik_relations(_V2(2, 8)).ok)


@check("cherednik-characters", "cher.V2_character", "character of V_2 is q^{3/2}/(1-q) to cut 8")
def _v2char(cfg):
    g = ch.graded_character(_V2(2, 8))
    return _exact(g.shift == Fraction(3, 2) and all(c == 1 for c in g.coeffs[:9]))


@check("cherednik-characters", "cher.V2_chara", "characters of V_2 match the generalized-exponent formula")
def _chara(cfg):
    V = _V2(2, 8)
    ok = all(ch.graded_character(V, ct) == ch.chara_formula(2, 2, ct, 8) for ct in ch.conjugacy_classes(2))
    if not cfg.quick:
        V4 = _V2(4, 3)
        ok = ok and all(ch.graded_character(V4, ct) == ch.chara_formula(2, 4, ct, 3)
                        for ct in ch.conjugacy_classes(4))
    return _exact(ok)


@check("cherednik-characters", "cher.LC_dimension", "L(C) for (N, n) = (2, 3) has dimension 4")
def _lcdim(cfg):
    L = _lc_module()
    return _exact(L.finite and L.dim() == 4)


@check("cherednik-characters", "cher.LC_character", "character of L(C) matches the cuspidal formula")
def _lcchar(cfg):
    return _exact(ch.lc_check(_lc_module(), 2))


@check("cherednik-characters", "cher.deco", "decomposition of L(C) over S_n for N = 2")
def _deco(cfg):
    L = _lc_module()
    return _exact(all(ch.deco_check(2, 3, mu, L)[0] for mu in ((3,), (2, 1))))


@check("cherednik-characters", "cher.kostant", "generalized exponents agree with Kostant's zero-weight count")
def _kostant(cfg):
    cases = (((2,), 2, 6), ((1, 1), 2, 4), ((2, 1), 3, 3))
    return _exact(all(d == e for d, e in (ch.kostant_check(mu, N, c) for mu, N, c in cases)))


# ---------------------------------------------------------------- daha-check

@check("daha-check", "daha.hecke", "Hecke quadratic relation for the half monodromy on L(C), n = 2, r = 3", 1e-5)
def _hecke_res(cfg):
    return _hecke().residual


@check("daha-check", "daha.eigenvalues", "half monodromy eigenvalues t/q and -1/(qt)", 1e-5)
def _hecke_eig(cfg):
    return _hecke().eig_error


@check("daha-check", "daha.limit", "half monodromy tends to s_12 as a, b -> 0", 1e-6)
def _hecke_lim(cfg):
    return _hecke().limit_residual


# ------------------------------------------------------------------ running

def checks_for(suite):
    if suite == "all":
        return list(REGISTRY)
    if suite not in SUITES:
        raise click.UsageError("unknown suite %r; choose from %s" % (suite, ", ".join(SUITES + ("all",))))
    return [c for c in REGISTRY if c.suite == suite]


def run_check(c, cfg):
    tol = c.tolerance if cfg.tol is None else cfg.tol
    try:
        r = float(c.fn(cfg))
        err = None
    except Exception as exc:  # a crashing check is a failed record, not a crashed run
        r, err = float("inf"), "%s: %s" % (type(exc).__name__, exc)
    return Record(c.id, c.anchor, r, tol, bool(r < tol), c.experimental, err)


def _run_suite(suite, cfg):
    return [run_check(c, cfg) for c in checks_for(suite)]


def run(cfg):
    """Run a suite; returns (report dict, exit code)."""
    t0 = time.time()
    suites = SUITES if cfg.suite == "all" else (cfg.suite,)
    checks_for(cfg.suite)
    if cfg.workers > 1 and len(suites) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            parts = list(ex.map(_run_suite, suites, [cfg] * len(suites)))
    else:
        parts = [_run_suite(s, cfg) for s in suites]
    records = [r for part in parts for r in part]
    hard = [r for r in records if not r.experimental]
    report = {
        "schema": SCHEMA,
        "suite": cfg.suite,
        "config": {"seed": cfg.seed, "quick": cfg.quick, "tol": cfg.tol, "samples": cfg.samples},
        "records": [r.as_dict() for r in records],
        "summary": {"total": len(records), "passed": sum(r.passed for r in records),
                    "failed": [r.id for r in hard if not r.passed],
                    "warnings": [r.id for r in records if r.experimental and not r.passed]},
        "wall_time": round(time.time() - t0, 3),
    }
    return report, records, (0 if all(r.passed for r in hard) else 1)


def _print_summary(records, out=None):
    for r in records:
        status = "PASS" if r.passed else ("WARN" if r.experimental else "FAIL")
        line = "%-4s  %-44s %-10s tol %-8g %s" % (status, r.id, "%.3e" % r.residual if math.isfinite(r.residual)
                                                  else "inf", r.tolerance, r.anchor)
        if r.error:
            line += "  [%s]" % r.error
        click.echo(line, file=out)
    n_fail = sum(1 for r in records if not r.passed and not r.experimental)
    click.echo("%d checks, %d failed" % (len(records), n_fail), file=out)


def _list(suite):
    for c in checks_for(suite):
        click.echo("%-20s %-44s %s%s" % (c.suite, c.id, c.anchor, "  (experimental)" if c.experimental else ""))


def _common(f):
    f = click.option("--list", "list_", is_flag=True, help="List registered checks and exit.")(f)
    f = click.option("--json", "json_path", type=click.Path(dir_okay=False), help="Write the JSON report here.")(f)
    f = click.option("--quick", is_flag=True, help="Lower degree and fewer samples.")(f)
    f = click.option("--tol", type=float, default=None, help="Override every tolerance.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True, help="Sampling seed.")(f)
    f = click.option("--samples", type=click.IntRange(min=1), default=None, help="Random sample count.")(f)
    return f


def _invoke(suite, seed, tol, json_path, quick, list_, samples):
    if list_:
        _list(suite)
        return
    if tol is not None and tol < 0:
        raise click.BadParameter("tolerance must be nonnegative", param_hint="--tol")
    workers = int(os.environ.get("UKZB_WORKERS", "1"))
    cfg = RunConfig(suite, seed, quick, tol, samples, max(1, workers), json_path)
    report, records, code = run(cfg)
    _print_summary(records)
    if json_path:
        with open(json_path, "w") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
    sys.exit(code)


@click.group(invoke_without_command=True)
@click.option("--list", "list_", is_flag=True, help="List every registered check and exit.")
@click.pass_context
def main(ctx, list_):
    """Verification suites for the universal elliptic KZB connection."""
    if list_:
        _list("all")
        return
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


def _make_command(suite):
    @_common
    def cmd(seed, tol, json_path, quick, list_, samples):
        _invoke(suite, seed, tol, json_path, quick, list_, samples)
    cmd.__doc__ = "Run the %s checks." % suite if suite != "all" else "Run every suite."
    return main.command(name=suite)(cmd)


for _s in SUITES + ("all",):
    _make_command(_s)
