"""Command line entry point: ``atcsrd <command> ...``.

Commands
--------
chunk          split a timed manifest into 2-19 s two-role chunks
eval           WER / WDER / PER of hypothesis lines against reference lines
lm             4-gram perplexity and OOV rate of a test split
snr            WADA-SNR per manifest entry, mean and histogram
fit-centroids  role centroids from labelled speaker embeddings
classify-role  nearest-centroid role of each embedding
decode         decode CTC posterior matrices and score them
report         confusion matrix or summary table over run records
simulate       synthetic system outputs for a reference file
"""

from __future__ import annotations

import argparse
import json
import sys
import zlib
from pathlib import Path

import numpy as np

from . import acoustics, ctc, lexstats, metrics, report, rolecluster, synthetic
from .align import ScoringScheme
from .errors import AtcSrdError
from .transcript import (
    chunk_corpus,
    is_tag,
    manifest_summary,
    read_manifest,
    read_transcripts,
    write_manifest,
    write_transcripts,
)


def _dump(obj, out=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _sentences(path) -> list[list[str]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [line.split() for line in lines if line.strip()]


def cmd_chunk(args) -> int:
    m = chunk_corpus(read_manifest(args.manifest), args.min_s, args.max_s)
    write_manifest(m, args.out)
    if args.text:
        write_transcripts((e.transcript for e in m.entries), args.text)
    if args.json:
        _dump(manifest_summary(m))
    return 0


def cmd_eval(args) -> int:
    refs = read_transcripts(args.ref)
    hyp_lines = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    # a hypothesis file may legitimately contain empty lines (no output)
    if len(hyp_lines) > len(refs) and not any(l.strip() for l in hyp_lines[len(refs):]):
        hyp_lines = hyp_lines[: len(refs)]
    if len(hyp_lines) != len(refs):
        raise AtcSrdError(f"{len(refs)} references but {len(hyp_lines)} hypotheses")
    scheme = ScoringScheme(args.match, args.mismatch, args.gap)
    pairs = [(r, metrics.hypothesis_tokens(h)) for r, h in zip(refs, hyp_lines)]
    rep = metrics.corpus_metrics(pairs, scheme, macro=args.macro)
    if args.record:
        missing = [n for n in ("train_dataset", "test_dataset", "architecture", "asr_model") if not getattr(args, n)]
        if missing:
            raise AtcSrdError(f"--record needs {', '.join('--' + m.replace('_', '-') for m in missing)}")
        rec = report.RunRecord(
            args.train_dataset, args.test_dataset, args.architecture, args.asr_model, args.seed, rep
        )
        report.write_record(rec, args.record)
    if args.json:
        _dump(rep.to_json(), args.out)
    else:
        lines = [
            f"pairs  {rep.n_pairs}",
            f"WER    {rep.wer.wer:.4f}  (S={rep.wer.substitutions} D={rep.wer.deletions} I={rep.wer.insertions} N={rep.wer.ref_len})",
            f"WDER   {rep.wder.wder:.4f}  ({rep.wder.role_errors}/{rep.wder.attributed_words})",
            f"PER    {rep.per.per:.4f}  ({rep.per.t_c}/{rep.per.t_p} tags placed)",
        ]
        if rep.macro:
            lines.append("macro  " + "  ".join(f"{k}={v:.4f}" for k, v in sorted(rep.macro.items())))
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_lm(args) -> int:
    train = _sentences(args.train)
    model = lexstats.train_lm(train, order=args.order, discount=args.discount, unk_hapax=args.unk_hapax)
    if args.save_model:
        model.save(args.save_model)
    vocab = {w for s in train for w in s if not is_tag(w)}
    rep = lexstats.lex_report(model, _sentences(args.test), vocab)
    if args.json:
        _dump(rep.to_json())
    else:
        print(f"perplexity {rep.perplexity:.4f}")
        print(f"oov_rate   {rep.oov_rate:.4f} ({rep.oov_token_count}/{rep.token_count})")
    return 0


def cmd_snr(args) -> int:
    m = read_manifest(args.manifest)
    base = args.base_dir or str(Path(args.manifest).parent)
    res = acoustics.manifest_snr(m, base)
    if args.json:
        _dump(res)
    else:
        for k, v in res["entries"].items():
            print(f"{k}\t{v:.2f}")
        if res["mean_db"] is not None:
            print(f"mean\t{res['mean_db']:.2f}")
    return 0


def cmd_fit_centroids(args) -> int:
    samples = [s for s in rolecluster.read_embeddings(args.input) if s.label is not None]
    c = rolecluster.fit_centroids(samples, args.per_class, args.seed, args.normalize)
    c.save(args.out)
    return 0


def cmd_classify_role(args) -> int:
    c = rolecluster.RoleCentroids.load(args.centroids)
    rows = []
    for e in rolecluster.read_embeddings(args.input):
        role, scores = rolecluster.classify(e, c)
        rows.append(
            {
                "id": e.id,
                "role": role.name,
                "cos_atco": scores[rolecluster.SpeakerRole.ATCO],
                "cos_pilot": scores[rolecluster.SpeakerRole.PILOT],
            }
        )
    if args.json:
        _dump(rows)
    else:
        for r in rows:
            print(f"{r['id']}\t{r['role']}\t{r['cos_atco']:.4f}\t{r['cos_pilot']:.4f}")
    return 0


def cmd_decode(args) -> int:
    refs = read_transcripts(args.refs)
    mats = [ctc.load_posteriors(p, args.vocab) for p in args.posteriors]
    if len(mats) != len(refs):
        raise AtcSrdError(f"{len(refs)} references but {len(mats)} posterior files")
    if args.hyp_out:
        texts = [ctc.decode_text(p, None, args.decoder, args.beam_width) for p in mats]
        Path(args.hyp_out).write_text("\n".join(texts) + "\n", encoding="utf-8")
    rep = ctc.joint_decode_eval(mats, refs, None, args.decoder, args.beam_width, args.macro)
    _dump(rep.to_json())
    return 0


def cmd_report(args) -> int:
    records = report.read_records(args.records)
    if not records:
        raise AtcSrdError(f"no run records in {args.records}")
    if args.table:
        group_by = tuple(args.table.split(","))
        stats = report.aggregate(records, args.metric, group_by, args.scenario)
        text = report.emit(stats, args.format, args.out, group_by)
    else:
        m = report.confusion_matrix(records, args.metric, args.architecture, args.asr_model)
        text = report.emit(m, args.format, args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    refs = read_transcripts(args.ref)
    vocab = sorted({w for r in refs for t in r.turns for w in t.words})
    profile = synthetic.PROFILES[(args.architecture, args.asr_model)]
    salt = zlib.crc32(args.salt.encode("utf-8"))
    rng = np.random.default_rng([args.seed, salt])
    lines = [synthetic.simulate_hypothesis(r, rng, profile, vocab, args.inter) for r in refs]
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="atcsrd", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("chunk", help="chunk a timed manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", required=True, help="output manifest (JSON Lines)")
    s.add_argument("--text", help="also write one tagged transcript per chunk")
    s.add_argument("--min-s", type=float, default=2.0)
    s.add_argument("--max-s", type=float, default=19.0)
    s.add_argument("--json", action="store_true", help="print a summary")
    s.set_defaults(func=cmd_chunk)

    s = sub.add_parser("eval", help="score hypotheses against references")
    s.add_argument("--ref", required=True)
    s.add_argument("--hyp", required=True)
    s.add_argument("--macro", action="store_true", help="add per-pair averaged ratios")
    s.add_argument("--json", action="store_true")
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.add_argument("--match", type=int, default=1)
    s.add_argument("--mismatch", type=int, default=-1)
    s.add_argument("--gap", type=int, default=-1)
    s.add_argument("--record", help="also store a run record JSON")
    s.add_argument("--train-dataset", dest="train_dataset")
    s.add_argument("--test-dataset", dest="test_dataset")
    s.add_argument("--architecture")
    s.add_argument("--asr-model", dest="asr_model")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("lm", help="n-gram perplexity and OOV rate")
    s.add_argument("--train", required=True)
    s.add_argument("--test", required=True)
    s.add_argument("--json", action="store_true")
    s.add_argument("--order", type=int, default=4)
    s.add_argument("--discount", type=float, default=0.75)
    s.add_argument("--unk-hapax", action="store_true")
    s.add_argument("--save-model")
    s.set_defaults(func=cmd_lm)

    s = sub.add_parser("snr", help="WADA-SNR of manifest audio")
    s.add_argument("--manifest", required=True)
    s.add_argument("--base-dir", help="root for relative audio paths (default: manifest dir)")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_snr)

    s = sub.add_parser("fit-centroids", help="role centroids from labelled embeddings")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--per-class", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--normalize", action="store_true")
    s.set_defaults(func=cmd_fit_centroids)

    s = sub.add_parser("classify-role", help="nearest-centroid role classification")
    s.add_argument("--centroids", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_classify_role)

    s = sub.add_parser("decode", help="decode CTC posteriors and score them")
    s.add_argument("--posteriors", nargs="+", required=True)
    s.add_argument("--refs", required=True)
    s.add_argument("--vocab", help="vocabulary JSON (required for binary posteriors)")
    s.add_argument("--decoder", choices=("greedy", "beam"), default="greedy")
    s.add_argument("--beam-width", type=int, default=8)
    s.add_argument("--macro", action="store_true")
    s.add_argument("--hyp-out", help="write decoded lines here")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("report", help="confusion matrix or summary table")
    s.add_argument("--records", required=True, help="directory of run record JSON files")
    s.add_argument("--metric", choices=report.METRICS, required=True)
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--out")
    s.add_argument("--architecture")
    s.add_argument("--asr-model", dest="asr_model")
    s.add_argument("--table", help="comma-separated group-by fields for a summary table")
    s.add_argument("--scenario", choices=("intra", "inter"))
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("simulate", help="synthetic system output for a reference file")
    s.add_argument("--ref", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--architecture", choices=sorted({a for a, _ in synthetic.PROFILES}), required=True)
    s.add_argument("--asr-model", dest="asr_model", choices=sorted({m for _, m in synthetic.PROFILES}), required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--salt", default="", help="extra seed material, e.g. the train/test pair")
    s.add_argument("--inter", action="store_true", help="simulate an inter-dataset run")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as e:
        print(f"atcsrd {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
