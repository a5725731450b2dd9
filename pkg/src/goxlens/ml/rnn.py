"""Minimal GRU/LSTM regressor in numpy with analytic BPTT.

Architecture choice: the tabular feature row is treated as an ordered
sequence, one timestep per feature column, with scalar input per step. That
gives every column (including the placebo) its own position in the unrolled
graph and hence its own analytic input gradient, which is what the
importance convention below needs. A single recurrent layer feeds a linear
head; training is plain mini-batch gradient descent on squared error.

Importance = mean absolute d(prediction)/d(input) over the test rows, in the
raw feature/target scale. This is a magnitude convention of ours; rankings,
not signed values, are what get compared across model families.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit as sigmoid

from ..errors import DataError, TrainingDivergence
from .dataset import LaggedDataset

MIN_RNN_TRAIN_ROWS = 200


class RecurrentNet:
    """The bare network over standardized inputs; parameters in a dict."""

    def __init__(self, cell: str, n_steps: int, hidden: int, seed: int):
        if cell not in ("gru", "lstm"):
            raise DataError(f"unknown cell {cell!r}; expected gru or lstm")
        self.cell = cell
        self.n_steps = n_steps
        self.hidden = hidden
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
        r = 1.0 / np.sqrt(hidden)
        H = hidden

        def u(*shape):
            return rng.uniform(-r, r, size=shape)

        p: dict[str, np.ndarray] = {}
        gates = ("z", "r", "c") if cell == "gru" else ("i", "f", "o", "g")
        for g in gates:
            p[f"Wx{g}"] = u(1, H)
            p[f"Wh{g}"] = u(H, H)
            p[f"b{g}"] = np.zeros(H)
        if cell == "lstm":
            p["bf"] = np.ones(H)  # open forget gate at init
        p["Wy"] = u(H)
        p["by"] = np.zeros(1)
        self.params = p

    # -- forward ---------------------------------------------------------

    def forward(self, X: np.ndarray):
        """X: (B, n_steps) standardized. Returns (yhat (B,), cache)."""
        p = self.params
        B = X.shape[0]
        H = self.hidden
        h = np.zeros((B, H))
        steps = []
        if self.cell == "gru":
            for t in range(self.n_steps):
                x = X[:, t : t + 1]
                z = sigmoid(x @ p["Wxz"] + h @ p["Whz"] + p["bz"])
                r_ = sigmoid(x @ p["Wxr"] + h @ p["Whr"] + p["br"])
                c = np.tanh(x @ p["Wxc"] + (r_ * h) @ p["Whc"] + p["bc"])
                h_new = (1.0 - z) * h + z * c
                steps.append((x, h, z, r_, c))
                h = h_new
        else:
            cstate = np.zeros((B, H))
            for t in range(self.n_steps):
                x = X[:, t : t + 1]
                i = sigmoid(x @ p["Wxi"] + h @ p["Whi"] + p["bi"])
                f = sigmoid(x @ p["Wxf"] + h @ p["Whf"] + p["bf"])
                o = sigmoid(x @ p["Wxo"] + h @ p["Who"] + p["bo"])
                g = np.tanh(x @ p["Wxg"] + h @ p["Whg"] + p["bg"])
                c_new = f * cstate + i * g
                tanh_c = np.tanh(c_new)
                steps.append((x, h, cstate, i, f, o, g, tanh_c))
                h = o * tanh_c
                cstate = c_new
        yhat = h @ p["Wy"] + p["by"][0]
        return yhat, (steps, h)

    # -- backward --------------------------------------------------------

    def backward(self, cache, dyhat: np.ndarray):
        """Gradients of sum(dyhat * yhat) w.r.t. params and inputs."""
        p = self.params
        steps, h_last = cache
        grads = {k: np.zeros_like(v) for k, v in p.items()}
        grads["Wy"] = h_last.T @ dyhat
        grads["by"] = np.array([dyhat.sum()])
        dh = dyhat[:, None] * p["Wy"][None, :]
        dX = np.empty((len(dyhat), self.n_steps))

        if self.cell == "gru":
            for t in range(self.n_steps - 1, -1, -1):
                x, h_prev, z, r_, c = steps[t]
                dz = dh * (c - h_prev)
                dc = dh * z
                dh_prev = dh * (1.0 - z)
                dc_pre = dc * (1.0 - c * c)
                grads["Wxc"] += x.T @ dc_pre
                grads["Whc"] += (r_ * h_prev).T @ dc_pre
                grads["bc"] += dc_pre.sum(axis=0)
                drh = dc_pre @ p["Whc"].T
                dr = drh * h_prev
                dh_prev += drh * r_
                dr_pre = dr * r_ * (1.0 - r_)
                dz_pre = dz * z * (1.0 - z)
                grads["Wxr"] += x.T @ dr_pre
                grads["Whr"] += h_prev.T @ dr_pre
                grads["br"] += dr_pre.sum(axis=0)
                grads["Wxz"] += x.T @ dz_pre
                grads["Whz"] += h_prev.T @ dz_pre
                grads["bz"] += dz_pre.sum(axis=0)
                dh_prev += dr_pre @ p["Whr"].T + dz_pre @ p["Whz"].T
                dx = dc_pre @ p["Wxc"].T + dr_pre @ p["Wxr"].T + dz_pre @ p["Wxz"].T
                dX[:, t] = dx[:, 0]
                dh = dh_prev
        else:
            dc = np.zeros_like(dh)
            for t in range(self.n_steps - 1, -1, -1):
                x, h_prev, c_prev, i, f, o, g, tanh_c = steps[t]
                do = dh * tanh_c
                dc = dc + dh * o * (1.0 - tanh_c * tanh_c)
                di = dc * g
                dg = dc * i
                df = dc * c_prev
                dc_next = dc * f
                di_pre = di * i * (1.0 - i)
                df_pre = df * f * (1.0 - f)
                do_pre = do * o * (1.0 - o)
                dg_pre = dg * (1.0 - g * g)
                for name, pre in (("i", di_pre), ("f", df_pre), ("o", do_pre), ("g", dg_pre)):
                    grads[f"Wx{name}"] += x.T @ pre
                    grads[f"Wh{name}"] += h_prev.T @ pre
                    grads[f"b{name}"] += pre.sum(axis=0)
                dh = (
                    di_pre @ p["Whi"].T
                    + df_pre @ p["Whf"].T
                    + do_pre @ p["Who"].T
                    + dg_pre @ p["Whg"].T
                )
                dx = (
                    di_pre @ p["Wxi"].T
                    + df_pre @ p["Wxf"].T
                    + do_pre @ p["Wxo"].T
                    + dg_pre @ p["Wxg"].T
                )
                dX[:, t] = dx[:, 0]
                dc = dc_next
        return grads, dX

    def loss_and_grads(self, X: np.ndarray, y: np.ndarray):
        """Mean squared error and its parameter gradients (standardized units)."""
        yhat, cache = self.forward(X)
        err = yhat - y
        loss = float(err @ err) / len(y)
        dyhat = 2.0 * err / len(y)
        grads, _ = self.backward(cache, dyhat)
        return loss, grads

    def input_grads(self, X: np.ndarray) -> np.ndarray:
        """d(yhat)/d(X) per row, standardized units; (B, n_steps)."""
        _, cache = self.forward(X)
        _, dX = self.backward(cache, np.ones(X.shape[0]))
        return dX


@dataclass
class RnnModel:
    family: str  # "gru" | "lstm"
    columns: list[str]
    importances: np.ndarray
    net: RecurrentNet
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    loss_trace: list[float]

    def predict(self, X: np.ndarray) -> np.ndarray:
        Xs = (np.asarray(X, dtype=np.float64) - self.x_mean) / self.x_std
        yhat, _ = self.net.forward(Xs)
        return yhat * self.y_std + self.y_mean


def train_rnn(
    ds: LaggedDataset,
    cell: str,
    hidden: int = 16,
    epochs: int = 20,
    batch: int = 32,
    seed: int = 0,
    learning_rate: float = 1e-2,
) -> RnnModel:
    """Train on the chronological split; features standardized by train stats.

    Divergence (epoch loss above 1e3 x the initial loss) aborts with the loss
    trace attached. Shuffling and initialization both derive from `seed`.
    """
    if ds.split < MIN_RNN_TRAIN_ROWS:
        raise DataError(f"need >= {MIN_RNN_TRAIN_ROWS} training rows, got {ds.split}")
    ss_init, ss_shuffle = np.random.SeedSequence(seed).spawn(2)
    net = RecurrentNet(cell, ds.n_features, hidden, seed)
    shuffle_rng = np.random.default_rng(ss_shuffle)

    x_mean = ds.X_train.mean(axis=0)
    x_std = ds.X_train.std(axis=0)
    x_std[x_std == 0.0] = 1.0
    y_mean = float(ds.y_train.mean())
    y_std = float(ds.y_train.std()) or 1.0
    Xs = (ds.X_train - x_mean) / x_std
    ys = (ds.y_train - y_mean) / y_std

    n = len(ys)
    trace: list[float] = []
    initial = None
    for _epoch in range(epochs):
        loss, _ = net.loss_and_grads(Xs, ys)
        trace.append(loss)
        if initial is None:
            initial = loss if loss > 0 else 1.0
        if loss > 1e3 * initial:
            raise TrainingDivergence(
                f"{cell} training diverged at epoch {_epoch} (loss {loss:.3e})", trace
            )
        perm = shuffle_rng.permutation(n)
        for lo in range(0, n, batch):
            rows = perm[lo : lo + batch]
            _, grads = net.loss_and_grads(Xs[rows], ys[rows])
            for k, g in grads.items():
                net.params[k] -= learning_rate * g
    final_loss, _ = net.loss_and_grads(Xs, ys)
    trace.append(final_loss)

    Xt = (ds.X_test - x_mean) / x_std
    dX = net.input_grads(Xt)
    importances = np.mean(np.abs(dX), axis=0) * y_std / x_std
    return RnnModel(
        family=cell,
        columns=list(ds.columns),
        importances=importances,
        net=net,
        x_mean=x_mean,
        x_std=x_std,
        y_mean=y_mean,
        y_std=y_std,
        loss_trace=trace,
    )
