#!/usr/bin/env python3
"""Independent reference implementation of the classic Porter stemming
algorithm, written from the published rule tables in condition/suffix
style (structured differently from the C++ port) for cross-validation.
"""
import sys


def cv_form(word):
    """Return the c/v classification string for a word."""
    out = []
    for i, ch in enumerate(word):
        if ch in "aeiou":
            out.append("v")
        elif ch == "y":
            out.append("c" if i == 0 else ("v" if out[i - 1] == "c" else "c"))
        else:
            out.append("c")
    return "".join(out)


def measure(stem):
    form = cv_form(stem)
    # collapse runs
    collapsed = []
    for ch in form:
        if not collapsed or collapsed[-1] != ch:
            collapsed.append(ch)
    return "".join(collapsed).count("vc")


def has_vowel(stem):
    return "v" in cv_form(stem)


def ends_double_consonant(word):
    return len(word) >= 2 and word[-1] == word[-2] and cv_form(word)[-1] == "c"


def ends_cvc(word):
    if len(word) < 3:
        return False
    form = cv_form(word)
    return form[-3:] == "cvc" and word[-1] not in "wxy"


def apply_rules(word, rules, min_measure):
    """rules: list of (suffix, replacement). Longest-match selects the rule;
    the measure condition then accepts or rejects. Returns new word."""
    best = None
    for suffix, repl in rules:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
            best = (suffix, repl)
    if best is None:
        return word
    suffix, repl = best
    stem = word[: len(word) - len(suffix)]
    if measure(stem) >= min_measure:
        return stem + repl
    return word


def step1a(word):
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies"):
        return word[:-3] + "i"
    if word.endswith("ss"):
        return word
    if word.endswith("s"):
        return word[:-1]
    return word


def step1b(word):
    if word.endswith("eed"):
        stem = word[:-3]
        if measure(stem) > 0:
            return word[:-1]
        return word
    hit = None
    if word.endswith("ed") and has_vowel(word[:-2]):
        hit = word[:-2]
    elif word.endswith("ing") and has_vowel(word[:-3]):
        hit = word[:-3]
    if hit is None:
        return word
    word = hit
    if word.endswith(("at", "bl", "iz")):
        return word + "e"
    if ends_double_consonant(word) and word[-1] not in "lsz":
        return word[:-1]
    if measure(word) == 1 and ends_cvc(word):
        return word + "e"
    return word


def step1c(word):
    if word.endswith("y") and has_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


STEP2 = [("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
         ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
         ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
         ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
         ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble")]

STEP3 = [("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
         ("ical", "ic"), ("ful", ""), ("ness", "")]

STEP4 = [("al", ""), ("ance", ""), ("ence", ""), ("er", ""), ("ic", ""),
         ("able", ""), ("ible", ""), ("ant", ""), ("ement", ""), ("ment", ""),
         ("ent", ""), ("ou", ""), ("ism", ""), ("ate", ""), ("iti", ""),
         ("ous", ""), ("ive", ""), ("ize", "")]


def step4(word):
    best = None
    for suffix, repl in STEP4:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
            best = (suffix, repl)
    # "ion" participates with its own stem condition; it competes on length
    if word.endswith("ion") and (best is None or 3 > len(best[0])):
        stem = word[:-3]
        if stem and stem[-1] in "st":
            best = ("ion", "")
        else:
            best = ("ion", None)  # selected but condition fails
    if best is None:
        return word
    suffix, repl = best
    if repl is None:
        return word
    stem = word[: len(word) - len(suffix)]
    if measure(stem) > 1:
        return stem
    return word


def step5a(word):
    if word.endswith("e"):
        stem = word[:-1]
        a = measure(stem)
        if a > 1 or (a == 1 and not ends_cvc(stem)):
            return stem
    return word


def step5b(word):
    if word.endswith("ll") and measure(word) > 1:
        return word[:-1]
    return word


def porter(word):
    if len(word) <= 2:
        return word
    word = step1a(word)
    word = step1b(word)
    word = step1c(word)
    word = apply_rules(word, STEP2, 1)
    word = apply_rules(word, STEP3, 1)
    word = step4(word)
    word = step5a(word)
    word = step5b(word)
    return word


if __name__ == "__main__":
    for line in sys.stdin:
        w = line.strip()
        if w:
            print(f"{w}\t{porter(w)}")
