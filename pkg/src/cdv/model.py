"""Discourse document model: BLSTM over sentence vectors, a tanh +
L2-normalized discourse layer, and twin tanh decoders into the entity and
aspect spaces, trained against self-supervised per-sentence targets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import serialization
from .corpus import Document, derive_labels, truncate_for_training
from .embeddings import N_FLAGS, WordEmbeddingTable, sigma_avg
from .errors import CdvError, EmptyInputError, ParseError, ShapeError
from .nn import AdamState, Blstm, Dense, L2Normalize
from .nn.losses import plain_cdv_loss_grad, robust_cdv_loss_grad
from .spaces import AspectSpace, EntitySpace

LOSSES = {"plain": plain_cdv_loss_grad, "robust": robust_cdv_loss_grad}


@dataclass
class CdvHyper:
    """Document-model training settings.

    ``decoder_only_epochs`` freezes everything upstream of the decoders
    for the first N epochs. At small-corpus scale this matters a lot:
    end-to-end optimization reliably saturates the recurrent stack into
    a constant discourse vector before any per-sentence structure is
    learned, while the frozen standardized encoder is already a strong
    featurizer for the decoders to read. Set it to ``epochs`` to train
    in that reservoir regime throughout.
    """

    hidden: int = 64
    discourse_dim: int = 32
    epochs: int = 50
    batch_docs: int = 16
    lr: float = 1e-3
    lr_decay: float = 0.975
    weight_decay: float = 1e-4
    loss: str = "robust"
    max_sentences: int = 396
    max_tokens: int = 96
    decoder_only_epochs: int = 0


@dataclass
class DiscourseMatrix:
    """Per-sentence discourse vectors with their decoded views."""

    doc_id: str
    delta: np.ndarray        # (T, discourse_dim), rows unit-normalized
    eps_hat: np.ndarray      # (T, d_eps)
    alpha_hat: np.ndarray    # (T, d_alpha)

    def __len__(self) -> int:
        return self.delta.shape[0]


@dataclass
class TrainingTargets:
    eps: np.ndarray          # (T, d_eps)
    alpha: np.ndarray        # (T, d_alpha)
    mask: np.ndarray         # (T,) bool; False rows are excluded from the loss
    doc_id: str = ""


class CdvModel:
    """Document encoder + discourse decoders."""

    def __init__(self, input_dim, hidden, discourse_dim, d_eps, d_alpha, seed=0):
        rng = np.random.default_rng(seed)
        self.blstm = Blstm(input_dim, hidden, rng, name="doc")
        self.discourse = Dense(2 * hidden, discourse_dim, activation="tanh", rng=rng, name="disc")
        self.norm = L2Normalize()
        self.dec_eps = Dense(discourse_dim, d_eps, activation="tanh", rng=rng, name="dec_eps")
        self.dec_alpha = Dense(discourse_dim, d_alpha, activation="tanh", rng=rng, name="dec_alpha")
        # frozen standardization of the recurrent output, fit on the training
        # corpus before training. Raw BLSTM states are dominated by a shared
        # offset; the unit normalization downstream would amplify it and hand
        # the decoders a near-constant discourse vector.
        self.h_center = np.zeros(2 * hidden)
        self.h_scale = np.ones(2 * hidden)
        self.input_dim = input_dim
        self.hidden = hidden
        self.discourse_dim = discourse_dim
        self.d_eps = d_eps
        self.d_alpha = d_alpha
        self.seed = seed
        self.meta: dict = {}

    @property
    def params(self):
        return {
            **self.blstm.params,
            **self.discourse.params,
            **self.dec_eps.params,
            **self.dec_alpha.params,
        }

    @property
    def grads(self):
        return {
            **self.blstm.grads,
            **self.discourse.grads,
            **self.dec_eps.grads,
            **self.dec_alpha.grads,
        }

    def zero_grads(self):
        self.blstm.zero_grads()
        self.discourse.zero_grads()
        self.dec_eps.zero_grads()
        self.dec_alpha.zero_grads()

    def forward(self, sigmas: np.ndarray):
        """One pass over a (T, input_dim) sentence-vector sequence."""
        sigmas = np.asarray(sigmas, dtype=float)
        if sigmas.ndim != 2 or sigmas.shape[0] == 0:
            raise EmptyInputError("cannot encode an empty document")
        if sigmas.shape[1] != self.input_dim:
            raise ShapeError(
                f"sentence vectors have dim {sigmas.shape[1]} but model expects {self.input_dim}"
            )
        H = self.blstm.forward(sigmas)
        Hn = (H - self.h_center) / self.h_scale
        delta = self.norm.forward(self.discourse.forward(Hn))
        eps_hat = self.dec_eps.forward(delta)
        alpha_hat = self.dec_alpha.forward(delta)
        return delta, eps_hat, alpha_hat

    def backward(self, d_eps_hat: np.ndarray, d_alpha_hat: np.ndarray):
        d_delta = self.dec_eps.backward(d_eps_hat) + self.dec_alpha.backward(d_alpha_hat)
        d_pre = self.norm.backward(d_delta)
        dHn = self.discourse.backward(d_pre)
        return self.blstm.backward(dHn / self.h_scale)

    def fit_standardization(self, sigma_seqs) -> None:
        """Per-coordinate mean/std of the recurrent output over a corpus."""
        rows = np.concatenate([self.blstm.forward(s) for s in sigma_seqs], axis=0)
        self.h_center = rows.mean(axis=0)
        std = rows.std(axis=0)
        self.h_scale = np.where(std < 1e-8, 1.0, std)

    # --- persistence ---

    def to_bytes(self) -> bytes:
        meta = {
            "kind": "cdv_model",
            "dims": {
                "input_dim": self.input_dim,
                "hidden": self.hidden,
                "discourse_dim": self.discourse_dim,
                "d_eps": self.d_eps,
                "d_alpha": self.d_alpha,
            },
            "seed": self.seed,
            "extra": self.meta,
        }
        tensors = {f"param.{k}": v for k, v in self.params.items()}
        tensors["h_center"] = self.h_center
        tensors["h_scale"] = self.h_scale
        return serialization.dump_bytes(meta, tensors)

    def fingerprint(self) -> str:
        return serialization.fingerprint_bytes(self.to_bytes())

    def save(self, path) -> str:
        data = self.to_bytes()
        with open(path, "wb") as fh:
            fh.write(data)
        return serialization.fingerprint_bytes(data)

    @classmethod
    def load(cls, path) -> "CdvModel":
        meta, tensors = serialization.load(path)
        if meta.get("kind") != "cdv_model":
            raise ParseError(f"not a model checkpoint: kind={meta.get('kind')!r}", path)
        model = cls(**meta["dims"], seed=meta["seed"])
        params = model.params
        for name, arr in tensors.items():
            if name.startswith("param."):
                params[name[len("param.") :]][...] = arr
        model.h_center = tensors["h_center"]
        model.h_scale = tensors["h_scale"]
        model.meta = meta.get("extra", {})
        return model


def document_sigmas(doc: Document, table: WordEmbeddingTable) -> np.ndarray:
    return np.stack([sigma_avg(s, table) for s in doc.sentences])


def encode_document(model: CdvModel, sigmas: np.ndarray, doc_id: str = "") -> DiscourseMatrix:
    """Single full-document pass; no per-query work."""
    delta, eps_hat, alpha_hat = model.forward(sigmas)
    return DiscourseMatrix(doc_id=doc_id, delta=delta, eps_hat=eps_hat, alpha_hat=alpha_hat)


def decode(model: CdvModel, delta) -> tuple[np.ndarray, np.ndarray]:
    """The two tanh projections of one or more discourse vectors."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape[-1] != model.discourse_dim:
        raise ShapeError(
            f"discourse vector has dim {delta.shape[-1]} but model expects {model.discourse_dim}"
        )
    return model.dec_eps.forward(delta), model.dec_alpha.forward(delta)


def build_targets(
    doc: Document,
    labels,
    espace: EntitySpace,
    aspace: AspectSpace,
) -> TrainingTargets:
    """Per-sentence mean embeddings of the self-supervision labels.

    Entity labels without a stored vector are dropped; a sentence whose
    entity labels all drop is masked out of the loss (it still flows
    through the encoder). Aspect embedding is total via the encoder
    fallback, so aspects never mask.
    """
    T = len(labels)
    eps = np.zeros((T, espace.dimension))
    alpha = np.zeros((T, aspace.dimension))
    mask = np.zeros(T, dtype=bool)
    aspect_cache: dict[str, np.ndarray] = {}
    for t, lab in enumerate(labels):
        entity_vecs = [espace.vector_of(e) for e in sorted(lab.entities) if e in espace]
        if entity_vecs:
            eps[t] = np.mean(entity_vecs, axis=0)
            mask[t] = True
        parts = []
        for a in sorted(lab.aspects):
            if a not in aspect_cache:
                aspect_cache[a] = aspace.embed(a)
            parts.append(aspect_cache[a])
        alpha[t] = np.mean(parts, axis=0)
    return TrainingTargets(eps=eps, alpha=alpha, mask=mask, doc_id=doc.doc_id)


@dataclass
class PreparedDoc:
    doc_id: str
    sigmas: np.ndarray
    targets: TrainingTargets


def prepare_training_docs(docs, table, espace, aspace, hyper: CdvHyper) -> list[PreparedDoc]:
    prepared = []
    for doc in docs:
        clipped = truncate_for_training(doc, hyper.max_sentences, hyper.max_tokens)
        targets = build_targets(clipped, derive_labels(clipped), espace, aspace)
        if not targets.mask.any():
            continue
        prepared.append(
            PreparedDoc(doc.doc_id, document_sigmas(clipped, table), targets)
        )
    return prepared


def _doc_loss_and_backward(model: CdvModel, prep: PreparedDoc, loss_grad, scale: float) -> float:
    """Forward + loss on unmasked steps + scaled backward. Returns the loss."""
    _, eps_hat, alpha_hat = model.forward(prep.sigmas)
    m = prep.targets.mask
    loss, g_eps_c, g_alpha_c = loss_grad(
        eps_hat[m], alpha_hat[m], prep.targets.eps[m], prep.targets.alpha[m]
    )
    g_eps = np.zeros_like(eps_hat)
    g_alpha = np.zeros_like(alpha_hat)
    g_eps[m] = g_eps_c * scale
    g_alpha[m] = g_alpha_c * scale
    model.backward(g_eps, g_alpha)
    return loss


def train_cdv(
    docs,
    table: WordEmbeddingTable,
    espace: EntitySpace,
    aspace: AspectSpace,
    hyper: CdvHyper | None = None,
    seed: int = 0,
    log_path=None,
):
    """Train the document model; returns (model, per-epoch log records).

    Deterministic under ``seed``. The log records are
    {"epoch", "mean_loss", "lr"} dicts, also written line-delimited to
    ``log_path`` when given.
    """
    hyper = hyper or CdvHyper()
    if hyper.loss not in LOSSES:
        raise ValueError(f"unknown loss {hyper.loss!r}; expected one of {sorted(LOSSES)}")
    loss_grad = LOSSES[hyper.loss]
    prepared = prepare_training_docs(docs, table, espace, aspace, hyper)
    if not prepared:
        raise EmptyInputError("no documents with resolvable labels to train on")

    model = CdvModel(
        input_dim=table.dimension + N_FLAGS,
        hidden=hyper.hidden,
        discourse_dim=hyper.discourse_dim,
        d_eps=espace.dimension,
        d_alpha=aspace.dimension,
        seed=seed,
    )
    model.meta = {
        "espace_fingerprint": espace.fingerprint(),
        "aspace_fingerprint": aspace.fingerprint(),
        "word_table_fingerprint": table.fingerprint(),
        "hyper": vars(hyper).copy(),
    }
    model.fit_standardization([p.sigmas for p in prepared])
    # start the decoders at the corpus-mean targets: the shared component of
    # the gradient otherwise dominates early training and saturates the
    # recurrent stack into a constant discourse vector before any
    # per-sentence signal can be learned
    eps_rows = np.concatenate([p.targets.eps[p.targets.mask] for p in prepared])
    alpha_rows = np.concatenate([p.targets.alpha[p.targets.mask] for p in prepared])
    model.dec_eps.params["dec_eps.b"][...] = np.arctanh(np.clip(eps_rows.mean(axis=0), -0.98, 0.98))
    model.dec_alpha.params["dec_alpha.b"][...] = np.arctanh(np.clip(alpha_rows.mean(axis=0), -0.98, 0.98))
    params = model.params
    adam = AdamState(
        params, lr=hyper.lr, weight_decay=hyper.weight_decay, lr_decay=hyper.lr_decay
    )
    rng = np.random.default_rng(seed + 1)
    records = []
    decoder_params = {k: v for k, v in params.items() if k.startswith("dec_")}
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(1, hyper.epochs + 1):
            order = rng.permutation(len(prepared))
            total = 0.0
            decoder_only = epoch <= hyper.decoder_only_epochs
            for start in range(0, len(order), hyper.batch_docs):
                batch = order[start : start + hyper.batch_docs]
                model.zero_grads()
                scale = 1.0 / len(batch)
                for idx in batch:
                    loss = _doc_loss_and_backward(model, prepared[idx], loss_grad, scale)
                    if not np.isfinite(loss):
                        raise CdvError(
                            f"non-finite loss at epoch {epoch} doc {prepared[idx].doc_id}"
                        )
                    total += loss
                if decoder_only:
                    adam.step(decoder_params, {k: model.grads[k] for k in decoder_params})
                else:
                    adam.step(params, model.grads)
            record = {"epoch": epoch, "mean_loss": total / len(prepared), "lr": adam.lr}
            records.append(record)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")
            adam.advance_epoch()
    finally:
        if log_fh:
            log_fh.close()
    model.meta["train_log_tail"] = records[-1] if records else None
    return model, records
