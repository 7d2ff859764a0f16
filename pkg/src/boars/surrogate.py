"""Gaussian-process surrogate over image patches.

Three kernels: RBF with per-dimension length scales, the standard exp-sin^2
periodic kernel summed over input dimensions, and a deep kernel that embeds
the patch into a 2-D latent with a small fully-connected net feeding a base
kernel. Hyperparameters (and net weights, jointly) are trained by
minimizing the negative log marginal likelihood with Adam; positivity is
enforced by optimizing log-transformed hyperparameters.

Everything runs in float64 on CPU; given the same data and seed, fits are
bit-reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import torch

from .errors import SurrogateError

torch.set_default_dtype(torch.float64)

KERNEL_KINDS = ("rbf", "periodic", "deep")
MAX_JITTER = 1e-2
DEFAULT_HIDDEN = (64, 32)
LATENT_DIM = 2


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 200
    learning_rate: float = 0.1
    jitter: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.learning_rate <= 0 or self.jitter <= 0:
            raise ValueError("learning rate and jitter must be positive")


class RbfKernel(torch.nn.Module):
    """sigma^2 * exp(-0.5 * sum_m (x_m - x'_m)^2 / theta_m^2)."""

    kind = "rbf"

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.log_sigma2 = torch.nn.Parameter(torch.zeros(()))
        self.log_theta = torch.nn.Parameter(torch.zeros(dim))

    def forward(self, x1: torch.Tensor, x2: torch.Tensor) -> torch.Tensor:
        # the difference-then-square form is kept on purpose: expanding the
        # squared distance through matrix products cancels catastrophically
        # once a length scale shrinks, and the lost precision breaks the
        # Cholesky factorization
        theta = torch.exp(self.log_theta)
        d = (x1[:, None, :] - x2[None, :, :]) / theta
        return torch.exp(self.log_sigma2) * torch.exp(-0.5 * (d**2).sum(-1))

    def diag(self, x: torch.Tensor) -> torch.Tensor:
        return torch.exp(self.log_sigma2).expand(x.shape[0])


class PeriodicKernel(torch.nn.Module):
    """Standard periodic kernel, summed over input dimensions:
    sigma^2 * exp(-2 * sum_m sin^2(pi * (x_m - x'_m) / rho) / ell^2).

    A single sin^2 of the Euclidean distance is not positive semidefinite
    for d >= 2 inputs; the per-dimension sum is.
    """

    kind = "periodic"

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        self.log_sigma2 = torch.nn.Parameter(torch.zeros(()))
        self.log_ell = torch.nn.Parameter(torch.zeros(()))
        self.log_rho = torch.nn.Parameter(torch.zeros(()))

    def forward(self, x1: torch.Tensor, x2: torch.Tensor) -> torch.Tensor:
        # sum_m sin^2(pi d_m / rho) = dim/2 - (cos a . cos b + sin a . sin b)/2
        # with a = 2 pi x1 / rho, b = 2 pi x2 / rho; the dot products become
        # matrix multiplies, avoiding the (n, m, dim) broadcast
        w = 2.0 * math.pi / torch.exp(self.log_rho)
        c1, s1 = torch.cos(w * x1), torch.sin(w * x1)
        c2, s2 = torch.cos(w * x2), torch.sin(w * x2)
        sum_sin2 = (0.5 * (x1.shape[-1] - c1 @ c2.T - s1 @ s2.T)).clamp(min=0.0)
        return torch.exp(self.log_sigma2) * torch.exp(
            -2.0 * sum_sin2 / torch.exp(2.0 * self.log_ell)
        )

    def diag(self, x: torch.Tensor) -> torch.Tensor:
        return torch.exp(self.log_sigma2).expand(x.shape[0])


class FeatureNet(torch.nn.Module):
    """Fully-connected patch embedder: input -> hidden (tanh) -> 2, linear output."""

    def __init__(self, in_dim: int, hidden: tuple[int, ...] = DEFAULT_HIDDEN, seed: int = 0):
        super().__init__()
        self.in_dim = in_dim
        self.hidden = tuple(hidden)
        widths = [in_dim, *hidden, LATENT_DIM]
        layers = []
        for a, b in zip(widths[:-1], widths[1:]):
            layers.append(torch.nn.Linear(a, b))
        self.layers = torch.nn.ModuleList(layers)
        g = torch.Generator().manual_seed(seed)
        for lin in self.layers:
            bound = 1.0 / math.sqrt(lin.in_features)
            with torch.no_grad():
                lin.weight.uniform_(-bound, bound, generator=g)
                lin.bias.uniform_(-bound, bound, generator=g)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for lin in self.layers[:-1]:
            x = torch.tanh(lin(x))
        return self.layers[-1](x)


class DeepKernel(torch.nn.Module):
    """Base kernel evaluated on the FeatureNet embedding of raw patches."""

    kind = "deep"

    def __init__(self, dim: int, base: str = "rbf",
                 hidden: tuple[int, ...] = DEFAULT_HIDDEN, seed: int = 0):
        super().__init__()
        if base not in ("rbf", "periodic"):
            raise ValueError(f"unsupported base kernel {base!r}")
        self.dim = dim
        self.net = FeatureNet(dim, hidden, seed=seed)
        self.base = RbfKernel(LATENT_DIM) if base == "rbf" else PeriodicKernel(LATENT_DIM)

    def forward(self, x1: torch.Tensor, x2: torch.Tensor) -> torch.Tensor:
        return self.base(self.net(x1), self.net(x2))

    def diag(self, x: torch.Tensor) -> torch.Tensor:
        return self.base.diag(x)


def make_kernel(kind: str, dim: int, base: str = "rbf",
                hidden: tuple[int, ...] = DEFAULT_HIDDEN, seed: int = 0) -> torch.nn.Module:
    if kind == "rbf":
        return RbfKernel(dim)
    if kind == "periodic":
        return PeriodicKernel(dim)
    if kind == "deep":
        return DeepKernel(dim, base=base, hidden=hidden, seed=seed)
    raise ValueError(f"unknown kernel kind {kind!r}")


def kernel_eval(kernel: torch.nn.Module, x: np.ndarray, xp: np.ndarray) -> float:
    """Covariance between two single inputs."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    xp = np.atleast_1d(np.asarray(xp, dtype=np.float64))
    if x.shape != xp.shape or x.shape[0] != kernel.dim:
        raise ValueError("kernel input dimension mismatch")
    with torch.no_grad():
        k = kernel(torch.from_numpy(x)[None, :], torch.from_numpy(xp)[None, :])
    return float(k[0, 0])


def embed(net: FeatureNet, patch: np.ndarray) -> np.ndarray:
    """Deterministic forward pass of the feature net on one patch."""
    patch = np.asarray(patch, dtype=np.float64)
    if patch.shape != (net.in_dim,):
        raise ValueError(f"patch length {patch.shape} does not match net input {net.in_dim}")
    with torch.no_grad():
        z = net(torch.from_numpy(patch)[None, :])[0]
    return z.numpy()


def _chol_with_jitter(k_mat: torch.Tensor, jitter: float) -> tuple[torch.Tensor, float]:
    """Cholesky of K + jitter*scale*I, escalating jitter x10 up to MAX_JITTER.

    The jitter is scaled by the mean diagonal so escalation keeps working
    when the variance hyperparameter wanders far from 1 during training.
    """
    n = k_mat.shape[0]
    eye = torch.eye(n, dtype=k_mat.dtype)
    scale = max(float(torch.diagonal(k_mat).mean().detach()), 1e-12)
    j = jitter
    while True:
        chol, info = torch.linalg.cholesky_ex(k_mat + j * scale * eye)
        if int(info) == 0:
            return chol, j, j * scale
        if j >= MAX_JITTER:
            raise SurrogateError(
                f"covariance factorization failed at leading minor {int(info)} "
                f"even with jitter {j * scale:g}"
            )
        j *= 10.0


def _nll_torch(kernel: torch.nn.Module, x: torch.Tensor, y: torch.Tensor,
               jitter: float) -> tuple[torch.Tensor, float]:
    k_mat = kernel(x, x)
    n = x.shape[0]
    chol, j_mult, _ = _chol_with_jitter(k_mat, jitter)
    alpha = torch.cholesky_solve(y[:, None], chol)[:, 0]
    loss = (
        0.5 * torch.dot(y, alpha)
        + torch.log(torch.diagonal(chol)).sum()
        + 0.5 * n * math.log(2.0 * math.pi)
    )
    return loss, j_mult


def nll(kernel: torch.nn.Module, x: np.ndarray, y: np.ndarray, jitter: float = 1e-6) -> float:
    """Negative log marginal likelihood of (x, y) under the kernel (zero mean)."""
    xt = torch.from_numpy(np.asarray(x, dtype=np.float64))
    yt = torch.from_numpy(np.asarray(y, dtype=np.float64))
    with torch.no_grad():
        return float(_nll_torch(kernel, xt, yt, jitter)[0])


@dataclass
class GPModel:
    """Fitted zero-mean GP (Y centered by its training mean)."""

    kernel: torch.nn.Module
    train_x: torch.Tensor
    train_y: torch.Tensor
    y_mean: float
    chol: torch.Tensor
    alpha: torch.Tensor
    jitter: float

    @property
    def n(self) -> int:
        return self.train_x.shape[0]


def fit_gp(
    x: np.ndarray,
    y: np.ndarray,
    kind: str,
    config: TrainConfig,
    base: str = "rbf",
    warm_start: torch.nn.Module | None = None,
) -> GPModel:
    """Train hyperparameters (and net weights, for deep) by Adam on the NLL.

    Passing warm_start reuses an existing kernel module's parameters as the
    starting point; a fresh Adam state is used for every fit.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("fit_gp needs an (n >= 2, d) input matrix")
    if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
        raise ValueError("training data must be finite")
    xt = torch.from_numpy(x)
    y_mean = float(y.mean())
    yt = torch.from_numpy(y - y_mean)

    kernel = warm_start if warm_start is not None else make_kernel(
        kind, x.shape[1], base=base, seed=config.seed
    )
    opt = torch.optim.Adam(kernel.parameters(), lr=config.learning_rate)
    # remember the jitter level that last factorized to skip re-escalation
    j_cur = config.jitter
    for step in range(config.steps):
        opt.zero_grad()
        loss, j_cur = _nll_torch(kernel, xt, yt, j_cur)
        if not torch.isfinite(loss):
            raise SurrogateError(f"non-finite NLL at optimizer step {step}")
        loss.backward()
        opt.step()

    with torch.no_grad():
        k_mat = kernel(xt, xt)
        chol, _, used = _chol_with_jitter(k_mat, config.jitter)
        alpha = torch.cholesky_solve(yt[:, None], chol)[:, 0]
    return GPModel(
        kernel=kernel, train_x=xt, train_y=yt, y_mean=y_mean,
        chol=chol, alpha=alpha, jitter=used,
    )


def posterior(model: GPModel, xstar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and (clamped nonnegative) variance at candidate inputs."""
    xstar = np.asarray(xstar, dtype=np.float64)
    if xstar.ndim != 2 or xstar.shape[1] != model.train_x.shape[1]:
        raise ValueError("candidate dimension mismatch")
    xs = torch.from_numpy(xstar)
    with torch.no_grad():
        k_star = model.kernel(model.train_x, xs)  # (n, m)
        mean = model.y_mean + k_star.T @ model.alpha
        v = torch.linalg.solve_triangular(model.chol, k_star, upper=False)
        var = model.kernel.diag(xs) - (v**2).sum(0)
        var = torch.clamp(var, min=0.0)
    return mean.numpy(), var.numpy()


def kernel_to_dict(kernel: torch.nn.Module) -> dict:
    """JSON-serializable checkpoint of kernel hyperparameters and net weights."""
    d = {"kind": kernel.kind, "dim": kernel.dim}
    if kernel.kind == "rbf":
        d["log_sigma2"] = float(kernel.log_sigma2.detach())
        d["log_theta"] = kernel.log_theta.detach().numpy().tolist()
    elif kernel.kind == "periodic":
        d["log_sigma2"] = float(kernel.log_sigma2.detach())
        d["log_ell"] = float(kernel.log_ell.detach())
        d["log_rho"] = float(kernel.log_rho.detach())
    else:
        d["base"] = kernel_to_dict(kernel.base)
        d["hidden"] = list(kernel.net.hidden)
        d["net"] = [
            {"weight": lin.weight.detach().numpy().tolist(),
             "bias": lin.bias.detach().numpy().tolist()}
            for lin in kernel.net.layers
        ]
    return d


def kernel_from_dict(d: dict) -> torch.nn.Module:
    kind = d["kind"]
    if kind == "rbf":
        k = RbfKernel(d["dim"])
        with torch.no_grad():
            k.log_sigma2.fill_(d["log_sigma2"])
            k.log_theta.copy_(torch.tensor(d["log_theta"]))
        return k
    if kind == "periodic":
        k = PeriodicKernel(d["dim"])
        with torch.no_grad():
            k.log_sigma2.fill_(d["log_sigma2"])
            k.log_ell.fill_(d["log_ell"])
            k.log_rho.fill_(d["log_rho"])
        return k
    if kind == "deep":
        k = DeepKernel(d["dim"], base=d["base"]["kind"], hidden=tuple(d["hidden"]))
        k.base = kernel_from_dict(d["base"])
        with torch.no_grad():
            for lin, ld in zip(k.net.layers, d["net"]):
                lin.weight.copy_(torch.tensor(ld["weight"]))
                lin.bias.copy_(torch.tensor(ld["bias"]))
        return k
    raise ValueError(f"unknown kernel kind {kind!r}")


def save_checkpoint(kernel: torch.nn.Module, path) -> None:
    with open(path, "w") as f:
        json.dump(kernel_to_dict(kernel), f)


def load_checkpoint(path) -> torch.nn.Module:
    with open(path) as f:
        return kernel_from_dict(json.load(f))
