"""Frozen CIDEr-D values for tests/unit/scoring_test.cpp.

Uses the CiderScorer shipped with pycocoevalcap (pure Python part only):
    pip install --no-deps pycocoevalcap
Inputs are already lowercase and punctuation-free, so whitespace splitting
matches the C++ tokenizer.
"""

from pycocoevalcap.cider.cider_scorer import CiderScorer

CORPUS = [
    ("a man riding a horse on a beach",
     ["a man rides a horse along the beach", "a person on a horse at the sea",
      "man riding horse by the ocean"]),
    ("two dogs play in the snow",
     ["two dogs playing in snow", "a pair of dogs run through the snow"]),
    ("a red car parked on the street",
     ["a red car on a city street", "a parked red automobile",
      "a car parked next to the curb", "red vehicle on the road"]),
]

LARGER = CORPUS + [
    ("a cat sleeping on a sofa", ["a cat asleep on the couch", "a sleeping cat on a sofa"]),
    ("people walking in a park", ["a group of people walk through a park"]),
    ("a plate of food on a table", ["a plate with food sitting on a wooden table",
                                    "food served on a plate"]),
]


def run(corpus):
    scorer = CiderScorer(n=4, sigma=6.0)
    for cand, refs in corpus:
        scorer += (cand, refs)
    _, scores = scorer.compute_score()
    return list(scores)


if __name__ == "__main__":
    for name, corpus in (("toy", CORPUS), ("larger", LARGER)):
        for (cand, _), s in zip(corpus, run(corpus)):
            print(f"{name}\t{cand}\t{s:.15f}")
    # identical candidate for item 0 of the toy corpus
    same = [(CORPUS[0][1][0], CORPUS[0][1])] + CORPUS[1:]
    print(f"self\t{same[0][0]}\t{run(same)[0]:.15f}")
