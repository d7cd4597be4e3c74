"""Show the readability fusion doing real work, then attribute the
model's success output to the five indices by gradient.

The corpus here is adversarial for a text-content model: sentence
embeddings are pure noise (loaded from .semb files), and the label is a
pure function of polysyllable density. Only the fused readability
vector can carry the signal.

Run:  python demos/04_readability_attribution.py   (about a minute)
"""

import tempfile
from pathlib import Path

from bookpred import pipeline, synth
from bookpred.corpus import load_corpus, split_train_val
from bookpred.pipeline import EncoderConfig, ModelSpec, TrainConfig
from bookpred.readability import INDEX_NAMES

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    manifest = synth.make_readability_corpus(root, n_books=120, seed=8, embedding_dim=32)
    corpus = load_corpus(manifest)
    trainval, test = split_train_val(corpus, 0.25, seed=3)
    encoder = EncoderConfig(kind="external", dim=32, directory=root / "semb")

    reports = {}
    for use_readability in (True, False):
        cfg = TrainConfig(
            seed=4,
            epochs=150,
            encoder=encoder,
            model=ModelSpec(use_readability=use_readability),
        )
        result = pipeline.train(trainval, cfg)
        report = pipeline.evaluate(result.params, result.scaler, test, cfg)
        reports[use_readability] = (cfg, result, report)
        tag = "with" if use_readability else "without"
        print(f"CNN {tag} readability fusion: test weighted F1 {report.weighted_f1:.3f}")

    cfg, result, _ = reports[True]
    attribution = pipeline.attribute_readability(result.params, result.scaler, test, cfg)
    print(f"\nmean gradient of the Successful logit over {attribution.n_books} books:")
    for name, value in zip(INDEX_NAMES, attribution.mean_gradient):
        bar = "#" * int(min(abs(value), 2.0) * 20)
        print(f"  {name:5s} {value:+.4f} {bar}")
    print(
        "\nThe planted driver (polysyllable density, the SMOG input) should "
        "dominate with a positive sign; the other four indices fluctuate "
        "independently of the label, so their gradients stay comparatively small."
    )

    probability = pipeline.attribute_readability(
        result.params, result.scaler, test, cfg, target="probability"
    )
    print("\nsame attribution against the softmax probability instead of the logit:")
    for name, value in zip(INDEX_NAMES, probability.mean_gradient):
        print(f"  {name:5s} {value:+.5f}")
