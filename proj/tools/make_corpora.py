#!/usr/bin/env python3
"""Regenerates the bundled style corpora under corpora/.

Each corpus comes from a small seeded grammar with its own vocabulary,
punctuation habits and line structure. Output is deterministic; the files in
the repository are the output of this script with the default seed.
"""

import argparse
import pathlib
import random

MIN_CHARS = 12000


def pick(rng, xs):
    return xs[rng.randrange(len(xs))]


def logbook(rng):
    winds = ["N", "NNE", "NE", "ENE", "E", "SE", "S", "SW", "W", "NW"]
    events = [
        "Sighted a brig to leeward, showing no colours.",
        "Took in the fore topsail.",
        "Set all plain sail.",
        "Carpenter sounded the well, 14 inches.",
        "Served out lime juice to the people.",
        "Heavy swell from the westward.",
        "Employed scraping the decks.",
        "Punished J. Harker, 12 lashes, for drunkenness.",
        "Caught a shark, 7 ft.",
        "Bent new main course.",
    ]
    out = []
    day = 1
    while sum(map(len, out)) < MIN_CHARS:
        lat = f"{rng.randint(10, 48)}°{rng.randint(0, 59):02d}'{pick(rng, 'NS')}"
        lon = f"{rng.randint(5, 70)}°{rng.randint(0, 59):02d}'{pick(rng, 'EW')}"
        lines = [f"Day {day}. Lat. {lat}, Long. {lon}."]
        for _ in range(rng.randint(2, 4)):
            h = rng.randint(1, 12)
            lines.append(f"  {h} {pick(rng, ['a.m.', 'p.m.'])} -- Wind {pick(rng, winds)}, force {rng.randint(1, 9)}. "
                         f"{pick(rng, events)}")
        out.append("\n".join(lines) + "\n\n")
        day += 1
    return "".join(out)


def sermon(rng):
    subj = ["the Lord", "the wicked", "the righteous man", "thy neighbour", "the stranger", "the meek",
            "the house of Jacob", "the proud"]
    verbs = ["shall inherit", "shall not behold", "hath forsaken", "walketh in", "delighteth in",
             "shall be cast into", "seeketh after", "keepeth"]
    objs = ["the land", "the darkness", "the law of his fathers", "the paths of wisdom", "the outer fire",
            "the counsel of the ungodly", "the morning", "his vineyard"]
    openers = ["Verily I say unto thee,", "And lo,", "Behold,", "Hearken, O brethren:", "Wherefore", "Thus"]
    out = []
    while sum(map(len, out)) < MIN_CHARS:
        parts = []
        for _ in range(rng.randint(2, 4)):
            parts.append(f"{pick(rng, subj)} {pick(rng, verbs)} {pick(rng, objs)}")
        sentence = f"{pick(rng, openers)} " + "; and ".join(parts) + "."
        out.append(sentence[0].upper() + sentence[1:] + (" " if rng.random() < 0.75 else "\n\n"))
    return "".join(out)


def telegraph(rng):
    words = ["ARRIVED", "LONDON", "TUESDAY", "SEND", "FUNDS", "IMMEDIATELY", "MOTHER", "WELL", "SHIP", "DELAYED",
             "FOG", "CONTRACT", "SIGNED", "REPLY", "PAID", "REGRET", "CANNOT", "ATTEND", "WEDDING", "BANK",
             "CLOSED", "WIRE", "TWENTY", "POUNDS", "AWAIT", "INSTRUCTIONS", "TRAIN", "NOON"]
    out = []
    n = 1
    while sum(map(len, out)) < MIN_CHARS:
        body = []
        for _ in range(rng.randint(2, 5)):
            body.append(" ".join(pick(rng, words) for _ in range(rng.randint(2, 5))) + " STOP")
        out.append(f"NO. {n:04d} FROM {pick(rng, words)} TO {pick(rng, words)} = " + " ".join(body) + " =\n")
        n += 1
    return "".join(out)


def verse(rng):
    rhymes = [["night", "light", "flight", "white", "sight"], ["sea", "free", "me", "tree", "be"],
              ["day", "grey", "away", "stay", "play"], ["heart", "part", "art", "start", "apart"],
              ["sky", "die", "high", "nigh", "sigh"]]
    starts = ["O gentle", "How softly", "Upon the", "Beneath the", "And all the", "Where once the", "Sweet",
              "Farewell, thou"]
    mids = ["wandering", "silver", "weary", "golden", "silent", "trembling", "ancient", "dreaming"]
    nouns = ["moon", "river", "willow", "shepherd", "maiden", "wind", "rose", "bell"]
    out = []
    while sum(map(len, out)) < MIN_CHARS:
        stanza = []
        for _ in range(2):
            group = pick(rng, rhymes)
            a, b = rng.sample(group, 2)
            for end in (a, b):
                line = f"{pick(rng, starts)} {pick(rng, mids)} {pick(rng, nouns)} of {end}"
                stanza.append(line + pick(rng, [",", ";", "!", ""]))
        stanza[-1] = stanza[-1].rstrip(",;") + "."
        out.append("\n".join(stanza) + "\n\n")
    return "".join(out)


def naturalist(rng):
    subjects = ["the variability of domestic pigeons", "the distribution of freshwater molluscs",
                "the structure of the orchid flower", "the instincts of the hive-bee",
                "the geological succession of organic beings", "the correlation of growth",
                "the embryology of the cirripedes", "the modification of species under nature"]
    claims = ["appears to depend in a high degree upon", "cannot be explained except by reference to",
              "is closely connected with", "seems to me to follow inevitably from", "is modified in accordance with"]
    causes = ["the conditions of life", "the long-continued action of natural selection",
              "the effects of use and disuse", "the struggle for existence", "a slow and gradual process",
              "the crossing of distinct varieties"]
    hedges = ["(as far as I can judge)", "(see Table IV.)", "(an important point)", "(p. 214)",
              "(according to Mr. Wallace)"]
    out = []
    while sum(map(len, out)) < MIN_CHARS:
        s = f"{pick(rng, subjects)} {pick(rng, claims)} {pick(rng, causes)}"
        if rng.random() < 0.4:
            s += f" {pick(rng, hedges)}"
        s += f", and this fact {pick(rng, claims)} {pick(rng, causes)}."
        out.append(s[0].upper() + s[1:] + (" " if rng.random() < 0.8 else "\n\n"))
    return "".join(out)


def playscript(rng):
    names = ["LORD ASHBY", "MRS. PELL", "DOCTOR", "KITTY", "THE BUTLER"]
    lines = ["I never said any such thing!", "Then who did, pray?", "Really, this is too much.",
             "You forget yourself, sir.", "Nonsense. Utter nonsense.", "Is the carriage ready?",
             "I shall tell Mother everything.", "Hush! Someone is coming.", "Oh, don't be tiresome.",
             "Well? Well? What have you to say?"]
    directions = ["[Aside.]", "[Crossing to the window.]", "[Laughing.]", "[Exit.]", "[Sits.]",
                  "[Enter KITTY, breathless.]", "[A pause.]"]
    out = []
    while sum(map(len, out)) < MIN_CHARS:
        who = pick(rng, names)
        d = f" {pick(rng, directions)}" if rng.random() < 0.35 else ""
        out.append(f"{who}.{d} {pick(rng, lines)}" + (f" {pick(rng, lines)}" if rng.random() < 0.4 else "") + "\n")
    return "".join(out)


def hardboiled(rng):
    subj = ["I", "She", "The cop", "Eddie", "The kid", "Nobody"]
    verbs = ["lit a cigarette", "didn't say anything", "looked at the rain", "poured another drink",
             "shrugged", "went out", "came back", "sat down", "waited", "laughed"]
    tails = ["It was late.", "The bar was empty.", "That was all.", "It didn't matter.", "Nobody came.",
             "The rain kept on.", "It was a good drink.", "We were tired."]
    out = []
    while sum(map(len, out)) < MIN_CHARS:
        para = []
        for _ in range(rng.randint(3, 6)):
            if rng.random() < 0.2:
                para.append(f'"{pick(rng, ["Sure", "No", "Forget it", "You bet", "Scram"])}," {pick(rng, ["I", "she", "he"])} said.')
            else:
                para.append(f"{pick(rng, subj)} {pick(rng, verbs)}.")
            if rng.random() < 0.3:
                para.append(pick(rng, tails))
        out.append(" ".join(para) + "\n\n")
    return "".join(out)


def tales(rng):
    people = ["the merchant", "the fisherman", "the Sultan", "the Wazir", "the jinni", "the porter",
              "the lady of the palace", "the old woman"]
    acts = ["went forth unto the city of Baghdad", "opened the brass vessel", "wept sore and beat upon his breast",
            "bade bring the slaves and the sweetmeats", "swore by Allah the Most High",
            "related to him all that had befallen", "mounted a mare of the noblest breed"]
    out = []
    night = 1
    while sum(map(len, out)) < MIN_CHARS:
        out.append(f"When it was the {night} Night,\n\nShe said, It hath reached me, O auspicious King, that ")
        for _ in range(rng.randint(3, 6)):
            out.append(f"{pick(rng, people)} {pick(rng, acts)}; ")
            if rng.random() < 0.3:
                out.append(f"and {pick(rng, people)} said to him, \"O my lord, {pick(rng, acts)}!\" ")
        out.append("--And Shahrazad perceived the dawn of day and ceased to say her permitted say.\n\n")
        night += 1
    return "".join(out)


STYLES = {
    "logbook": logbook,
    "sermon": sermon,
    "telegraph": telegraph,
    "verse": verse,
    "naturalist": naturalist,
    "playscript": playscript,
    "hardboiled": hardboiled,
    "tales": tales,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "corpora"))
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i, (name, fn) in enumerate(STYLES.items()):
        text = fn(random.Random(args.seed * 1000 + i))
        (out / f"{name}.txt").write_text(text, encoding="utf-8")
        print(f"{name}: {len(text)} chars")


if __name__ == "__main__":
    main()
