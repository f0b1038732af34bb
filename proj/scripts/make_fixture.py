#!/usr/bin/env python3
"""Generates the synthetic 12-review fixture corpus and independently
computes the expected pipeline outcomes (counts, removals, and statistics)
that the acceptance suite asserts. The expectations are derived here, in
Python, without touching the C++ implementation.
"""
import json
import os
import re

OUT = os.path.join(os.path.dirname(__file__), "..", "data", "fixtures")

TOPICS = ["parsing", "ranking", "caching", "routing", "indexing", "sampling"]


def tokenize(text):
    return re.findall(r"[a-z0-9]+", text.lower())


# ---------------------------------------------------------------- corpus ---

def cited(pid, title, abstract):
    return {
        "paper_id": pid,
        "title": title,
        "abstract": abstract,
        "body_sections": [],
        "outbound_citations": [],
        "field_of_study": ["Computer Science"],
    }


def review(pid, title, abstract, sections, outbound, fields=None, body=True):
    return {
        "paper_id": pid,
        "title": title,
        "abstract": abstract,
        "body_sections": sections if body else [],
        "outbound_citations": outbound,
        "field_of_study": fields or ["Computer Science"],
    }


CITED = {
    "C01": "Handcrafted pipelines transform raw features into outputs.",
    "C02": "Learned components replace manual rules with training.",
    "C03": "Evaluation suites compare systems across shared benchmarks.",
    "C04": "Sparse methods trade accuracy for lower memory budgets.",
    "C05": "Dense methods keep full context at a higher memory cost.",
    "C06": "Streaming variants process records one pass at a time.",
    "C07": "Batch variants accumulate records before processing starts.",
    "C08": "Graph structures encode relations between record pairs.",
    "C09": "Tree structures encode hierarchy under a single root.",
    "C10": "Adaptive schedules change parameters during the run.",
    "C11": "Fixed schedules keep parameters constant for the run.",
    "C12": "Hybrid designs combine several earlier approaches together.",
    "C13": "",  # present but abstract-less
    "C15": "Probabilistic models assign scores under uncertainty.",
    "C16": "Deterministic models assign scores without randomness.",
    "C17": "Offline systems precompute answers before queries arrive.",
    "C18": "Online systems compute answers while queries arrive.",
    "C19": "Compression reduces storage using shorter codes.",
    "C20": "Expansion enriches queries using related terms.",
    "S1": "Shared foundations paper used across many reviews.",
    "S2": "Shared methodology paper used across many reviews.",
}

SUITABLE = "This review summarizes prior published papers on {}."
UNSUITABLE = "We propose a novel method for {} and report new experiments."


def body(chapter_specs):
    return [{"heading": heading, "paragraphs": paragraphs}
            for heading, paragraphs in chapter_specs]


def lead_words(pid, count):
    return " ".join(CITED[pid].split()[:count]).lower()


def training_review(index):
    """R01..R06: two chapters, two resolvable citations each. Chapter text
    quotes words from the cited abstracts so novel-n-gram rates are
    meaningful rather than saturated."""
    topic = TOPICS[index - 1]
    a, b = f"C{2 * index - 1:02d}", f"C{2 * index:02d}"
    pid = f"R{index:02d}"
    sections = [
        (f"Early {topic}", [
            f"{lead_words(a, 4).capitalize()} shaped early {topic} [CITE:{a}].",
            f"Then {lead_words(b, 3)} became standard [CITE:{b}].",
        ]),
        (f"Modern {topic}", [
            f"Modern {topic} mixes {lead_words(b, 2)} with "
            f"{lead_words(a, 2)} [CITE:{b}] [CITE:{a}].",
        ]),
    ]
    return review(pid, f"A Survey of {topic.capitalize()} Systems",
                  SUITABLE.format(topic), body(sections),
                  [a, b, "S1", "S2"])


def make_corpus():
    records = []
    for index in range(1, 7):
        records.append(training_review(index))
    records.append(review(
        "R07", "An Overview of Evaluation Practice", SUITABLE.format("evaluation"),
        body([
            ("Methods", [
                "Probabilistic models assign scores [CITE:C15] while "
                "deterministic models [CITE:C16] rely on the shared "
                "foundations [CITE:S1] and shared methodology [CITE:S2], "
                "with offline systems [CITE:C17] on top.",
            ]),
            ("Applications", [
                "Probabilistic models [CITE:C15] pair with online systems "
                "that compute answers [CITE:C18], compression reduces "
                "storage [CITE:C19] and expansion enriches queries "
                "[CITE:C20] without randomness [CITE:C16].",
            ]),
            ("Limitations", [
                "Open problems remain in [CITE:C13] and dense methods "
                "[CITE:C05] settings.",
            ]),
        ]),
        ["C15", "C16", "C17", "C18", "C19", "C20", "S1", "S2", "C13", "C05"]))
    records.append(review(
        "R08", "A Literature Review of Serving Stacks", SUITABLE.format("serving"),
        body([
            ("Overview", [
                "Offline systems precompute answers [CITE:C17] while online "
                "systems compute them live [CITE:C18], compression reduces "
                "storage [CITE:C19], expansion enriches queries [CITE:C20] "
                "over the shared foundations paper [CITE:S1].",
            ]),
            ("Benchmarks", [
                "Benchmarks reuse deterministic models [CITE:C16] and "
                "expansion [CITE:C20] with the shared foundations [CITE:S1] "
                "and shared methodology [CITE:S2] atop probabilistic models "
                "[CITE:C15].",
            ]),
            ("Future", [
                "Future work targets [CITE:C14] integration beyond streaming "
                "variants [CITE:C06].",
            ]),
            ("Notes", [
                "Closing remarks without any citations at all.",
            ]),
        ]),
        ["C17", "C18", "C19", "C20", "S1", "S2", "C16", "C15", "C14", "C06"]))
    records.append(review(
        "R09", "A Survey of Quantum Widgets", UNSUITABLE.format("quantum widgets"),
        body([("Setup", ["Our new approach cites [CITE:C01] and [CITE:C02]."])]),
        ["C01", "C02"]))
    records.append(review(
        "R10", "A Survey Without Full Text", SUITABLE.format("nothing"),
        [], ["C01", "C02"], body=False))
    records.append(review(
        "R11", "Reviewing Neural Methods Quarterly", SUITABLE.format("neural methods"),
        body([("Only", ["Text citing [CITE:C01] and [CITE:C02]."])]),
        ["C01", "C02"]))
    records.append(review(
        "R12", "A Survey of Wet Lab Protocols", SUITABLE.format("wet labs"),
        body([("Only", ["Text citing [CITE:C01] and [CITE:C02]."])]),
        ["C01", "C02"], fields=["Biology"]))
    for pid, abstract in CITED.items():
        records.append(cited(pid, f"Base paper {pid} on methods", abstract))
    # C14 is cited by R08 but intentionally absent from the corpus.
    return records


def make_labels():
    labels = []
    subjects = ["parsers", "rankers", "caches", "routers", "indexes", "samplers",
                "planners", "encoders", "decoders", "kernels", "graphs", "trees"]
    for subject in subjects:
        labels.append({"title": f"A survey of {subject}",
                       "abstract": SUITABLE.format(subject), "label": "suitable"})
        labels.append({"title": f"Improving {subject}",
                       "abstract": UNSUITABLE.format(subject), "label": "unsuitable"})
    return labels


# ------------------------------------------------- expected-value oracle ---

KEYWORDS = ["survey", "overview", "literature review", "a review"]


def is_candidate(record):
    if "Computer Science" not in record["field_of_study"]:
        return False
    if not record["body_sections"]:
        return False
    title = record["title"].lower()
    return any(k in title for k in KEYWORDS)


MARKER = re.compile(r"\[CITE:([^\]]*)\]")


def split_chapters(record):
    chapters = []
    outbound = set(record["outbound_citations"])
    for section in record["body_sections"]:
        text = "\n\n".join(section["paragraphs"])
        seen, order = set(), []
        for marker in MARKER.findall(text):
            if marker in outbound and marker not in seen:
                seen.add(marker)
                order.append(marker)
        chapters.append({"title": section["heading"], "text": text, "cited": order})
    return chapters


def assemble(review_record, chapter, by_id):
    surviving = [c for c in chapter["cited"]
                 if c in by_id and by_id[c]["abstract"]]
    if len(surviving) < 2:
        return None
    tags = {pid: f"BIB{i + 1:03d}" for i, pid in enumerate(surviving)}

    def replace(match):
        return tags.get(match.group(1))

    # mirror of the library's rewrite: surviving markers become tags, dropped
    # markers also consume one adjacent space
    out = []
    pos = 0
    text = chapter["text"]
    for match in MARKER.finditer(text):
        out.append(text[pos:match.start()])
        repl = replace(match)
        pos = match.end()
        if repl is not None:
            out.append(repl)
        else:
            if pos < len(text) and text[pos] == " ":
                pos += 1
            elif out and out[-1].endswith(" "):
                out[-1] = out[-1][:-1]
    out.append(text[pos:])
    return {
        "review_title": review_record["title"],
        "chapter_title": chapter["title"],
        "inputs": [{"bib": tags[pid], "abstract": by_id[pid]["abstract"]}
                   for pid in surviving],
        "target": "".join(out),
        "cited": surviving,
    }


def novel_pct(target, abstracts, n):
    tokens = tokenize(target)
    if len(tokens) < n:
        return None
    grams = [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]
    seen = set()
    for abstract in abstracts:
        toks = tokenize(abstract)
        for i in range(max(0, len(toks) - n + 1)):
            seen.add(tuple(toks[i:i + n]))
    novel = sum(1 for gram in grams if gram not in seen)
    return 100.0 * novel / len(grams)


def stats_over(items):
    row = {
        "input_len": sum(sum(len(tokenize(a)) for a in it["abstracts"])
                         for it in items) / len(items),
        "target_len": sum(len(tokenize(it["target"])) for it in items) / len(items),
        "n_inputs": sum(len(it["abstracts"]) for it in items) / len(items),
    }
    for n in range(1, 5):
        vals = [novel_pct(it["target"], it["abstracts"], n) for it in items]
        vals = [v for v in vals if v is not None]
        row[f"novel_{n}"] = sum(vals) / len(vals) if vals else 0.0
    return row


def main():
    os.makedirs(OUT, exist_ok=True)
    records = make_corpus()
    by_id = {r["paper_id"]: r for r in records}

    candidates = [r["paper_id"] for r in records if is_candidate(r)]
    assert candidates == [f"R{i:02d}" for i in range(1, 10)], candidates

    # Designed classifier outcome: the blatant-phrase abstracts make R01..R08
    # suitable and R09 unsuitable. The acceptance run verifies this holds for
    # the trained stand-in too.
    kept = [f"R{i:02d}" for i in range(1, 9)]

    test_ids = ["R07", "R08"]
    train_pool = [pid for pid in kept if pid not in test_ids]

    examples = {}      # pid -> list of assembled examples in chapter order
    total_chapters = 0
    rejected = 0
    for pid in kept:
        chapters = split_chapters(by_id[pid])
        total_chapters += len(chapters)
        rows = []
        for chapter in chapters:
            assembled = assemble(by_id[pid], chapter, by_id)
            if assembled is None:
                rejected += 1
            else:
                rows.append(assembled)
        examples[pid] = rows

    # every non-designated review must contribute the same example count, so
    # per-split example counts do not depend on the seeded shuffle
    counts = {len(examples[pid]) for pid in train_pool}
    assert counts == {2}, counts

    # dedupe: overlap vs train reviews' outbound citations; the design makes
    # each test example either removed against every candidate train review
    # or kept against every one, so the outcome is shuffle-invariant
    removals = []
    surviving_test = []
    for pid in test_ids:
        for example in examples[pid]:
            cited = example["cited"]
            ratios = []
            for train_pid in train_pool:
                outbound = set(by_id[train_pid]["outbound_citations"])
                shared = sum(1 for c in cited if c in outbound)
                ratios.append(shared / len(cited))
            if all(r > 0.20 for r in ratios):
                removals.append({"source_review_id": pid,
                                 "chapter_title": example["chapter_title"],
                                 "ratio": ratios[0]})
            elif all(r <= 0.20 for r in ratios):
                surviving_test.append((pid, example))
            else:
                raise AssertionError("dedupe outcome depends on the shuffle")

    n_train_reviews = 5  # floor(0.95 * 6)
    n_valid_reviews = 1

    # chapter-level view over the union of the splits
    chapter_items = []
    for pid in train_pool:
        for example in examples[pid]:
            chapter_items.append({
                "abstracts": [i["abstract"] for i in example["inputs"]],
                "target": example["target"],
            })
    for pid, example in surviving_test:
        chapter_items.append({
            "abstracts": [i["abstract"] for i in example["inputs"]],
            "target": example["target"],
        })

    # review-level view: dedup abstracts by content, join targets
    review_items = []
    for pid in train_pool:
        rows = examples[pid]
        abstracts = []
        for example in rows:
            for item in example["inputs"]:
                if item["abstract"] not in abstracts:
                    abstracts.append(item["abstract"])
        review_items.append({
            "abstracts": abstracts,
            "target": "\n\n".join(example["target"] for example in rows),
        })
    for pid in test_ids:
        rows = [example for source, example in surviving_test if source == pid]
        abstracts = []
        for example in rows:
            for item in example["inputs"]:
                if item["abstract"] not in abstracts:
                    abstracts.append(item["abstract"])
        review_items.append({
            "abstracts": abstracts,
            "target": "\n\n".join(example["target"] for example in rows),
        })

    expected = {
        "candidates": len(candidates),
        "kept_reviews": len(kept),
        "total_chapters": total_chapters,
        "rejected_chapters": rejected,
        "train_examples": 2 * n_train_reviews,
        "valid_examples": 2 * n_valid_reviews,
        "test_examples_before_dedupe": len(removals) + len(surviving_test),
        "test_examples": len(surviving_test),
        "dedupe_removals": len(removals),
        "removal_ratios": sorted(r["ratio"] for r in removals),
        "review_stats": {
            "n_train": n_train_reviews, "n_valid": n_valid_reviews,
            "n_test": len({pid for pid, _ in surviving_test}),
            **stats_over(review_items),
        },
        "chapter_stats": {
            "n_train": 2 * n_train_reviews, "n_valid": 2 * n_valid_reviews,
            "n_test": len(surviving_test),
            **stats_over(chapter_items),
        },
    }

    with open(os.path.join(OUT, "corpus.jsonl"), "w") as f:
        for record in records:
            f.write(json.dumps(record, sort_keys=True) + "\n")
    with open(os.path.join(OUT, "labels.jsonl"), "w") as f:
        for label in make_labels():
            f.write(json.dumps(label, sort_keys=True) + "\n")
    with open(os.path.join(OUT, "test_ids.txt"), "w") as f:
        f.write("\n".join(test_ids) + "\n")
    with open(os.path.join(OUT, "pipeline_config.json"), "w") as f:
        json.dump({
            "classifier": {"mode": "standin", "labels_path": "labels.jsonl"},
            "train_ratio": 0.95,
        }, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(OUT, "expected.json"), "w") as f:
        json.dump(expected, f, indent=2, sort_keys=True)
        f.write("\n")
    print(json.dumps(expected, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
