from importlib import resources

import pytest
from hypothesis import given, strategies as st

from carenet.psl import SuffixIndex, bundled_index

# ---------------------------------------------------------------------------
# Independent oracle: forward-label linear scan over the same rule text,
# following the published matching algorithm (exceptions prevail, otherwise
# the matching rule with the most labels, otherwise an implicit one-label
# default). Kept deliberately different in structure from the package's
# reversed-tuple index.


def load_rule_text() -> str:
    return resources.files("carenet.data").joinpath("public_suffix_snapshot.dat").read_text(
        "utf-8"
    )


def parse_rules(text: str):
    rules = []
    for raw in text.splitlines():
        line = raw.strip().lower()
        if not line or line.startswith("//"):
            continue
        if line.startswith("!"):
            rules.append((line[1:].split("."), True))
        else:
            rules.append((line.split("."), False))
    return rules


def rule_matches(rule_labels, name_labels):
    if len(rule_labels) > len(name_labels):
        return False
    tail = name_labels[-len(rule_labels):]
    return all(r == "*" or r == t for r, t in zip(rule_labels, tail))


def oracle_suffix_label_count(name_labels, rules) -> int:
    matches = [(labels, exc) for labels, exc in rules if rule_matches(labels, name_labels)]
    for labels, exc in matches:
        if exc:
            return len(labels) - 1
    if not matches:
        return 1
    return max(len(labels) for labels, _ in matches)


def oracle_registrable(name: str, rules) -> str | None:
    name = name.strip().lower().rstrip(".")
    if not name:
        return None
    labels = name.split(".")
    if any(not lab or len(lab) > 63 for lab in labels) or all(l.isdigit() for l in labels):
        return None
    n = oracle_suffix_label_count(labels, rules)
    if n >= len(labels):
        return None
    return ".".join(labels[-(n + 1):])


RULES = parse_rules(load_rule_text())


@pytest.fixture(scope="module")
def rules():
    return RULES


@pytest.fixture(scope="module")
def index():
    return bundled_index()


CASES = [
    ("example.com", "com", "example.com"),
    ("a.b.example.com", "com", "example.com"),
    ("example.co.uk", "co.uk", "example.co.uk"),
    ("deep.example.co.uk", "co.uk", "example.co.uk"),
    ("com", "com", None),
    ("co.uk", "co.uk", None),
    ("www.ck", "ck", "www.ck"),  # exception rule beats the ck wildcard
    ("sub.www.ck", "ck", "www.ck"),
    ("other.ck", "other.ck", None),  # wildcard makes every ck child a suffix
    ("x.other.ck", "other.ck", "x.other.ck"),
    ("city.kawasaki.jp", "kawasaki.jp", "city.kawasaki.jp"),
    ("foo.kawasaki.jp", "foo.kawasaki.jp", None),
    ("x.foo.kawasaki.jp", "foo.kawasaki.jp", "x.foo.kawasaki.jp"),
    ("user.github.io", "github.io", "user.github.io"),
    ("github.io", "github.io", None),
    ("x.unlistedzone", "unlistedzone", "x.unlistedzone"),  # implicit default rule
    ("unlistedzone", "unlistedzone", None),
]


@pytest.mark.parametrize("name,suffix,registrable", CASES)
def test_known_names(index, name, suffix, registrable):
    assert index.public_suffix(name) == suffix
    assert index.registrable_domain(name) == registrable


@pytest.mark.parametrize("name,suffix,registrable", CASES)
def test_known_names_match_oracle(index, rules, name, suffix, registrable):
    assert index.registrable_domain(name) == oracle_registrable(name, rules)


def test_normalization(index):
    assert index.registrable_domain("ExAmPle.COM.") == "example.com"
    assert index.registrable_domain("  example.com ") == "example.com"


def test_rejected_names(index):
    assert index.registrable_domain("") is None
    assert index.registrable_domain("a..com") is None
    assert index.registrable_domain("192.168.1.10") is None
    assert index.registrable_domain("a" * 64 + ".com") is None


def test_empty_rule_set_rejected():
    with pytest.raises(ValueError):
        SuffixIndex([])
    with pytest.raises(ValueError):
        SuffixIndex(["// comments only"])


LABELS = st.text(alphabet="abcd0", min_size=1, max_size=6).filter(
    lambda s: not s.isdigit()
)


@st.composite
def domain_names(draw):
    base_rule = draw(st.sampled_from(RULES))[0]
    base = [draw(LABELS) if lab == "*" else lab for lab in base_rule]
    prefix = draw(st.lists(LABELS, min_size=0, max_size=3))
    return ".".join(prefix + base)


@given(domain_names())
def test_registrable_matches_oracle(name):
    index = bundled_index()
    assert index.registrable_domain(name) == oracle_registrable(name, RULES)
    suffix = index.public_suffix(name)
    reg = index.registrable_domain(name)
    if reg is not None:
        # the registrable domain is exactly the suffix plus one leading label
        assert reg.endswith("." + suffix)
        assert reg.count(".") == suffix.count(".") + 1


@given(st.lists(LABELS, min_size=1, max_size=5))
def test_arbitrary_names_match_oracle(parts):
    name = ".".join(parts)
    index = bundled_index()
    assert index.registrable_domain(name) == oracle_registrable(name, RULES)
