"""Command-line interface: ``lsrdl <subcommand> ...``.

Exit status is 0 on success, 2 for configuration errors and 3 for
numerical failures. Every command that writes artifacts also writes a
``config.json`` echo from which the run can be repeated.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import io
from .dictionary import DegenerateDictionaryError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

ALGOS = ("stark", "tefdil", "osubdil", "baseline")


class ConfigError(ValueError):
    """Invalid or contradictory settings."""


def parse_dims(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(int(v) for v in text)
    try:
        dims = tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)
    except ValueError:
        raise ConfigError(f"cannot parse dimensions {text!r}; expected e.g. 2,5,3") from None
    if not dims or min(dims) < 1:
        raise ConfigError(f"dimensions must be positive integers, got {text!r}")
    return dims


@dataclass
class TrainConfig:
    algo: str | None = None
    m_dims: tuple = ()
    p_dims: tuple = ()
    rank: int = 1
    sparsity: int | None = None
    lam: float | None = None
    iters: int = 30
    seed: int = 0
    lambda1: float = 1.0
    gamma: float = 1.0
    admm_iters: int = 500
    admm_tol: float = 1e-4
    cpd_tol: float = 1e-8
    lasso_tol: float = 1e-6
    batch: int = 1

    def validate(self) -> "TrainConfig":
        if self.algo is None:
            raise ConfigError("no algorithm given; use --algo {" + ",".join(ALGOS) + "}")
        if self.algo not in ALGOS:
            raise ConfigError(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGOS)}")
        self.m_dims, self.p_dims = parse_dims(self.m_dims), parse_dims(self.p_dims)
        if len(self.m_dims) != len(self.p_dims):
            raise ConfigError("--m and --p need the same number of factors")
        if self.rank < 1:
            raise ConfigError("--rank must be at least 1")
        if self.iters < 0 or self.batch < 1 or self.admm_iters < 1:
            raise ConfigError("iteration counts must be nonnegative and --batch at least 1")
        if self.sparsity is not None and not 0 < self.sparsity <= int(np.prod(self.p_dims)):
            raise ConfigError("--sparsity must lie between 1 and the number of atoms")
        if self.lam is not None and self.lam <= 0:
            raise ConfigError("--lambda must be positive")
        if self.algo == "stark":
            if self.sparsity is not None:
                raise ConfigError("stark codes with the lasso; use --lambda, not --sparsity")
            if self.lam is None:
                self.lam = 0.1
        elif self.algo == "baseline":
            if self.lam is not None:
                raise ConfigError("the baseline codes with OMP; use --sparsity, not --lambda")
            if self.sparsity is None:
                raise ConfigError("the baseline needs --sparsity")
        elif (self.sparsity is None) == (self.lam is None):
            raise ConfigError(f"{self.algo} needs exactly one of --sparsity (OMP) or --lambda (lasso)")
        if self.gamma <= 0 or self.lambda1 < 0:
            raise ConfigError("need --gamma > 0 and --lambda1 >= 0")
        return self


_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def read_config_file(path) -> dict:
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _TYPES:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value
    return out


def _coerce(key, value):
    if value is None:
        return None
    if key in ("m_dims", "p_dims"):
        return parse_dims(value)
    if key == "algo":
        return str(value)
    kind = _TYPES[key]
    try:
        if "int" in kind:
            return int(value)
        return float(value)
    except ValueError:
        raise ConfigError(f"bad value {value!r} for {key}") from None


def parse_config(args: argparse.Namespace) -> TrainConfig:
    """Merge the optional config file with command-line flags (flags win)."""
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for key in _TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    cfg = TrainConfig(**{k: _coerce(k, v) for k, v in values.items()})
    return cfg.validate()


def _echo(out_dir, command, payload) -> None:
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump({"command": command, **payload}, fh, indent=2, default=_jsonable)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


def _outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# ---------------------------------------------------------------- commands

def cmd_synth(args) -> int:
    from .synth import STREAM_TEST, SynthSpec, gen_dictionary, gen_samples

    spec = SynthSpec(parse_dims(args.m), parse_dims(args.p), args.rank, args.s, args.L,
                     args.noise, args.seed)
    D0 = gen_dictionary(spec)
    Y, X = gen_samples(D0.assembled, spec)
    out = _outdir(args.out_dir)
    io.save_tensor(os.path.join(out, "Y.bin"), Y)
    io.save_tensor(os.path.join(out, "X.bin"), X)
    io.save_dictionary(os.path.join(out, "D0.bin"), D0)
    if args.n_test:
        Yt, _ = gen_samples(D0.assembled, spec, L=args.n_test, stream=STREAM_TEST)
        io.save_tensor(os.path.join(out, "Y_test.bin"), Yt)
    _echo(out, "synth", asdict(spec) | {"n_test": args.n_test})
    print(f"wrote {Y.shape[1]} samples of dimension {Y.shape[0]} to {out}")
    return EXIT_OK


def _load_samples(path, m_dims) -> np.ndarray:
    """Samples as columns, from a matrix file or a tensor iterated along its last mode."""
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.endswith((".bin", ".csv")))
        cols = [io.load_matrix(os.path.join(path, n)) if n.endswith(".csv")
                else io.load_tensor(os.path.join(path, n)) for n in names]
        # each file holds one sample tensor of shape m_dims (or a flat vector)
        return np.column_stack([np.asarray(c).ravel() for c in cols])
    if str(path).endswith(".csv"):
        return io.load_csv(path)
    T = io.load_tensor(path)
    if T.ndim == 2:
        return T
    if T.shape[:-1] != tuple(m_dims):
        raise ConfigError(f"sample tensor dims {T.shape[:-1]} do not match --m {m_dims}")
    # one sample per slice along the last mode, in the row-major sample layout
    return np.stack([T[..., l].ravel() for l in range(T.shape[-1])], axis=1)


def train(cfg: TrainConfig, Y: np.ndarray):
    """Run the configured learner; returns ``(LsrDictionary, RunLog)``."""
    from .osubdil import OsubdilConfig, osubdil_train
    from .stark import StarkConfig, stark_train
    from .synth import baseline_train
    from .tefdil import TefdilConfig, tefdil_train

    m = int(np.prod(cfg.m_dims))
    if Y.shape[0] != m:
        raise ConfigError(f"samples have dimension {Y.shape[0]}, --m implies {m}")
    if cfg.algo == "tefdil":
        tc = TefdilConfig(r=cfg.rank, s=cfg.sparsity, lam=cfg.lam, outer_iters=cfg.iters,
                          cpd_tol=cfg.cpd_tol, lasso_tol=cfg.lasso_tol)
        return tefdil_train(Y, cfg.m_dims, cfg.p_dims, tc, seed=cfg.seed)
    if cfg.algo == "stark":
        sc = StarkConfig(lam=cfg.lam, lambda1=cfg.lambda1, gamma=cfg.gamma,
                         outer_iters=cfg.iters, admm_iters=cfg.admm_iters,
                         admm_tol=cfg.admm_tol, lasso_tol=cfg.lasso_tol)
        return stark_train(Y, cfg.m_dims, cfg.p_dims, sc, seed=cfg.seed)
    if cfg.algo == "osubdil":
        oc = OsubdilConfig(s=cfg.sparsity, lam=cfg.lam, batch=cfg.batch,
                           lasso_tol=cfg.lasso_tol)
        return osubdil_train(Y, cfg.m_dims, cfg.p_dims, cfg.rank, oc, seed=cfg.seed, warmup=Y)
    return baseline_train(Y, cfg.m_dims, cfg.p_dims, cfg.sparsity, outer_iters=cfg.iters,
                          seed=cfg.seed)


def cmd_train(args) -> int:
    cfg = parse_config(args)
    Y = _load_samples(args.data, cfg.m_dims)
    D, log = train(cfg, Y)
    out = _outdir(args.out_dir)
    io.save_dictionary(os.path.join(out, "dict.bin"), D)
    log.to_csv(os.path.join(out, "runlog.csv"), include_wall=not args.no_wall)
    _echo(out, "train", asdict(cfg) | {"data": args.data})
    last = {c: log.last(c) for c in log.columns if c in ("repr_error", "running_mean", "F_reg")}
    print(json.dumps({"algo": cfg.algo, **last}))
    return EXIT_OK


def _training_coder(dict_path, D) -> tuple:
    """Coder settings echoed by the training run that wrote `dict_path`.

    Falls back to OMP with ``ceil(p / 20)`` atoms when no echo is found.
    """
    echo = os.path.join(os.path.dirname(os.path.abspath(dict_path)), "config.json")
    if os.path.exists(echo):
        with open(echo) as fh:
            saved = json.load(fh)
        if saved.get("command") == "train":
            if saved.get("sparsity") is not None:
                return int(saved["sparsity"]), None
            if saved.get("lam") is not None:
                return None, float(saved["lam"])
    return -(-D.shape[1] // 20), None


def cmd_eval(args) -> int:
    from .init import repr_error
    from .sparse import OMP, Lasso, LassoOptions, code_batch

    if args.sparsity is not None and args.lam is not None:
        raise ConfigError("eval takes at most one of --sparsity or --lambda")
    D = io.load_dictionary(args.dict)
    Y = _load_samples(args.data, D.m_dims)
    sparsity, lam = args.sparsity, args.lam
    if sparsity is None and lam is None:
        sparsity, lam = _training_coder(args.dict, D)
    coder = OMP(sparsity) if sparsity is not None else Lasso(LassoOptions(lam))
    X = code_batch(Y, D.assembled, coder).values
    print(json.dumps({"repr_error": repr_error(Y, D.assembled, X), "samples": Y.shape[1]}))
    return EXIT_OK


def cmd_denoise(args) -> int:
    from .denoise import DenoiseConfig, PatchConfig, add_noise, denoise_pipeline, psnr

    img = io.load_image(args.inp)
    reference = io.load_image(args.clean) if args.clean else None
    if args.add_noise is not None:
        reference = img
        img = add_noise(img, args.add_noise, seed=args.seed)
    if args.algo not in ALGOS:
        raise ConfigError(f"unknown algorithm {args.algo!r}")
    cfg = DenoiseConfig(algo=args.algo, rank=args.rank, p_dims=parse_dims(args.p),
                        lam=args.lam, outer_iters=args.iters, s=args.sparsity, seed=args.seed,
                        patch=PatchConfig(stride=args.stride, channels=img.shape[2]))
    report, out = denoise_pipeline(img, cfg, reference=reference)
    io.save_image(args.out, out)
    rep = report.to_dict() | {"sigma_est": args.sigma_est, "input": args.inp}
    if reference is not None:
        # PSNR of what was actually written (8-bit rounding)
        rep["psnr_denoised_8bit"] = psnr(reference, io.load_image(args.out))
    stem = os.path.splitext(args.report or args.out)[0]
    with open(stem + ".json", "w") as fh:
        json.dump(rep, fh, indent=2, default=_jsonable)
    with open(stem + ".csv", "w", newline="") as fh:
        flat = {k: v for k, v in rep.items() if not isinstance(v, dict)}
        writer = csv.DictWriter(fh, fieldnames=list(flat))
        writer.writeheader()
        writer.writerow(flat)
    print(json.dumps({k: rep[k] for k in ("psnr_noisy", "psnr_denoised", "params_structured")},
                     default=_jsonable))
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .synth import SynthSpec, run_sample_complexity_sweep, summarize_sweep

    spec = SynthSpec(parse_dims(args.m), parse_dims(args.p), args.rank, args.s)
    algos = tuple(a for a in args.algos.split(",") if a)
    for a in algos:
        if a not in ("tefdil", "stark", "baseline"):
            raise ConfigError(f"sweep does not support algorithm {a!r}")
    rows = run_sample_complexity_sweep(spec, parse_dims(args.L_grid), algos,
                                       parse_dims_allow_zero(args.seeds), args.iters,
                                       args.n_test, out_csv=args.out, workers=args.workers)
    for (algo, L), (mean, lo, hi) in sorted(summarize_sweep(rows, "final_error").items()):
        print(f"{algo:9s} L={L:5d} final_error mean={mean:.4f} [{lo:.4f}, {hi:.4f}]")
    return EXIT_OK


def parse_dims_allow_zero(text) -> tuple:
    try:
        vals = tuple(int(v) for v in str(text).split(",") if v)
    except ValueError:
        raise ConfigError(f"cannot parse integer list {text!r}") from None
    if not vals or min(vals) < 0:
        raise ConfigError(f"expected nonnegative integers, got {text!r}")
    return vals


def cmd_rearrange_check(args) -> int:
    from .rearrange import build_map, rank_one_tensor, rearrange, rearrange_inv
    from .tensor import kron_chain

    m_dims, p_dims = parse_dims(args.m), parse_dims(args.p)
    if len(m_dims) != len(p_dims):
        raise ConfigError("--m and --p need the same number of factors")
    rmap = build_map(m_dims, p_dims)
    bijective = np.array_equal(np.sort(rmap.forward), np.arange(rmap.m * rmap.p))
    rng = np.random.default_rng(args.seed)
    exact = 0
    for _ in range(args.trials):
        fs = [rng.standard_normal((a, b)) for a, b in zip(m_dims, p_dims)]
        D = kron_chain(fs)
        ok = np.array_equal(rearrange(D, rmap), rank_one_tensor(fs))
        ok = ok and np.array_equal(rearrange_inv(rearrange(D, rmap), rmap), D)
        exact += bool(ok)
    result = {"m_dims": m_dims, "p_dims": p_dims, "tensor_dims": rmap.tensor_dims,
              "bijective": bool(bijective), "checksum": rmap.checksum(),
              "exact_trials": exact, "trials": args.trials}
    print(json.dumps(result, default=_jsonable))
    return EXIT_OK if bijective and exact == args.trials else EXIT_NUMERIC


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lsrdl", description="Low-separation-rank dictionary learning")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate synthetic LSR data")
    s.add_argument("--m", default="2,5,3")
    s.add_argument("--p", default="4,10,5")
    s.add_argument("--s", type=int, default=5)
    s.add_argument("--L", type=int, default=1000)
    s.add_argument("--rank", type=int, default=1)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n-test", type=int, default=0)
    s.add_argument("--out-dir", default="synth_out")
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", help="learn a dictionary")
    t.add_argument("--config", help="flat key = value file; flags override it")
    t.add_argument("--data", required=True, help="matrix/tensor file or directory of samples")
    t.add_argument("--algo")
    t.add_argument("--m", dest="m_dims")
    t.add_argument("--p", dest="p_dims")
    t.add_argument("--rank", type=int)
    t.add_argument("--sparsity", type=int)
    t.add_argument("--lambda", dest="lam", type=float)
    t.add_argument("--iters", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--lambda1", type=float)
    t.add_argument("--gamma", type=float)
    t.add_argument("--admm-iters", type=int)
    t.add_argument("--admm-tol", type=float)
    t.add_argument("--cpd-tol", type=float)
    t.add_argument("--lasso-tol", type=float)
    t.add_argument("--batch", type=int)
    t.add_argument("--out-dir", default="train_out")
    t.add_argument("--no-wall", action="store_true", help="omit wall-clock column from the log")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="representation error of a dictionary on data")
    e.add_argument("--dict", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--sparsity", type=int)
    e.add_argument("--lambda", dest="lam", type=float)
    e.set_defaults(func=cmd_eval)

    d = sub.add_parser("denoise", help="denoise an RGB image")
    d.add_argument("--in", dest="inp", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--algo", default="tefdil")
    d.add_argument("--rank", type=int, default=4)
    d.add_argument("--p", default="3,16,16")
    d.add_argument("--lambda", dest="lam", type=float, default=0.1)
    d.add_argument("--sparsity", type=int)
    d.add_argument("--iters", type=int, default=10)
    d.add_argument("--stride", type=int, default=4)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--sigma-est", type=float, help="noise level, recorded in the report")
    d.add_argument("--clean", help="clean reference image for PSNR")
    d.add_argument("--add-noise", type=float, help="treat --in as clean and add this noise")
    d.add_argument("--report", help="report path stem (default: next to --out)")
    d.set_defaults(func=cmd_denoise)

    w = sub.add_parser("sweep", help="sample-complexity sweep")
    w.add_argument("--m", default="2,5,3")
    w.add_argument("--p", default="4,10,5")
    w.add_argument("--s", type=int, default=5)
    w.add_argument("--rank", type=int, default=1)
    w.add_argument("--L-grid", default="50,100,200,500,1000,2000")
    w.add_argument("--algos", default="tefdil,baseline")
    w.add_argument("--seeds", default="0,1,2,3,4")
    w.add_argument("--iters", type=int, default=30)
    w.add_argument("--n-test", type=int, default=500)
    w.add_argument("--workers", type=int)
    w.add_argument("--out", default="sweep.csv")
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("rearrange-check", help="verify the rearrangement for given shapes")
    r.add_argument("--m", required=True)
    r.add_argument("--p", required=True)
    r.add_argument("--trials", type=int, default=10)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_rearrange_check)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"lsrdl: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (io.FormatError, ValueError) as exc:
        if isinstance(exc, DegenerateDictionaryError):
            print(f"lsrdl: numerical failure: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"lsrdl: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        print(f"lsrdl: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
