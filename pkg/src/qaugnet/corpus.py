"""Synthetic private/non-private email corpus.

Base emails come from topic templates (finance, scheduling, logistics,
smalltalk).  A private email is a base email with exactly one secret from one
of six categories injected through a carrier sentence; some carriers announce
the secret early and place it a few sentences later.
"""

from __future__ import annotations

import enum
import json
import random
import re
import string
from collections import Counter
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import ContextMismatch, IngestError, InputError


class Category(str, enum.Enum):
    SSN = "SSN"
    EMAIL_ADDRESS = "EmailAddress"
    PASSWORD = "Password"
    CREDIT_CARD = "CreditCard"
    ACCOUNT_BALANCE = "AccountBalance"
    TRANSACTION_ID = "TransactionId"


PERSONAL = (Category.SSN, Category.EMAIL_ADDRESS, Category.PASSWORD)
FINANCIAL = (Category.CREDIT_CARD, Category.ACCOUNT_BALANCE, Category.TRANSACTION_ID)

TOPICS = ("finance", "scheduling", "logistics", "smalltalk")

# Any of these words in a body opens the financial categories.
FINANCE_KEYWORDS = frozenset({
    "money", "payment", "payments", "invoice", "invoices", "budget", "bank",
    "account", "accounts", "wire", "transaction", "transactions", "funds",
    "card", "credit", "balance", "deposit", "refund", "billing", "payroll",
    "expense", "expenses", "reimbursement", "pay", "paid", "transfer",
})


@dataclass(frozen=True)
class EmailRecord:
    id: int
    sender: str
    recipient: str
    subject: str
    body: str
    label: int = 0
    injected_category: Optional[Category] = None

    def __post_init__(self) -> None:
        if not self.body:
            raise InputError("email body must be non-empty")
        if self.label not in (0, 1):
            raise InputError(f"label must be 0 or 1, got {self.label!r}")
        if self.injected_category is not None:
            object.__setattr__(self, "injected_category", Category(self.injected_category))

    @property
    def text(self) -> str:
        """Subject and body, the text the classifier sees."""
        return f"{self.subject}\n{self.body}"

    def to_json(self) -> str:
        d = asdict(self)
        d["injected_category"] = self.injected_category.value if self.injected_category else None
        return json.dumps(d, ensure_ascii=False)


@dataclass(frozen=True)
class Corpus:
    records: tuple[EmailRecord, ...]
    seed: Optional[int] = None
    _counts: Counter = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise InputError("record ids must be unique")
        object.__setattr__(self, "_counts", Counter(r.label for r in self.records))

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def count(self, label: int) -> int:
        return self._counts.get(label, 0)

    def by_id(self) -> dict[int, EmailRecord]:
        return {r.id: r for r in self.records}

    def subset(self, ids: Iterable[int]) -> "Corpus":
        index = self.by_id()
        return Corpus(tuple(index[i] for i in ids), self.seed)

    def to_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)

    def write_jsonl(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")


@dataclass(frozen=True)
class CorpusSplit:
    train: Corpus
    test: Corpus


# -- secret formats --------------------------------------------------------

PASSWORD_ALPHABET = string.ascii_letters + string.digits + "!@#"

SECRET_PATTERNS = {
    Category.SSN: re.compile(r"(?<![\d-])\d{3}-\d{2}-\d{4}(?![\d-])"),
    Category.EMAIL_ADDRESS: re.compile(r"[a-z0-9._]+@[a-z0-9-]+\.[a-z]{2,}"),
    Category.CREDIT_CARD: re.compile(r"(?<!\d)\d{4} \d{4} \d{4} \d{4}(?!\d)"),
    Category.ACCOUNT_BALANCE: re.compile(r"\$\d{1,3}(?:,\d{3})*\.\d{2}(?!\d)"),
    Category.TRANSACTION_ID: re.compile(r"TXN-[A-Z0-9]{10}(?![A-Z0-9])"),
}
_PASSWORD_RUN = re.compile(r"[A-Za-z0-9!@#]+")


def _is_password(token: str) -> bool:
    return (len(token) == 12
            and any(c.isupper() for c in token)
            and any(c.islower() for c in token)
            and any(c.isdigit() for c in token)
            and any(c in "!@#" for c in token))


def find_secrets(text: str, category: Category) -> list[str]:
    """All substrings of ``text`` shaped like a secret of ``category``."""
    if category is Category.PASSWORD:
        return [m.group() for m in _PASSWORD_RUN.finditer(text) if _is_password(m.group())]
    return SECRET_PATTERNS[category].findall(text)


def luhn_check_digit(partial: str) -> int:
    total = 0
    for i, ch in enumerate(reversed(partial)):
        d = int(ch)
        if i % 2 == 0:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return (10 - total % 10) % 10


def generate_secret(category: Category, rng: random.Random) -> str:
    category = Category(category)
    if category is Category.SSN:
        return f"{rng.randint(1, 899):03d}-{rng.randint(1, 99):02d}-{rng.randint(1, 9999):04d}"
    if category is Category.EMAIL_ADDRESS:
        name = rng.choice(_FIRST_NAMES).lower() + str(rng.randint(1, 999))
        return f"{name}@{rng.choice(_PERSONAL_DOMAINS)}"
    if category is Category.PASSWORD:
        # one of each class guarantees the shape is recognisable
        chars = [rng.choice(string.ascii_uppercase), rng.choice(string.ascii_lowercase),
                 rng.choice(string.digits), rng.choice("!@#")]
        chars += [rng.choice(PASSWORD_ALPHABET) for _ in range(8)]
        rng.shuffle(chars)
        return "".join(chars)
    if category is Category.CREDIT_CARD:
        partial = rng.choice("3456") + "".join(rng.choice(string.digits) for _ in range(14))
        digits = partial + str(luhn_check_digit(partial))
        return " ".join(digits[i:i + 4] for i in range(0, 16, 4))
    if category is Category.ACCOUNT_BALANCE:
        cents = rng.randint(100, 10 ** rng.randint(4, 9))
        return f"${cents // 100:,}.{cents % 100:02d}"
    alnum = string.ascii_uppercase + string.digits
    return "TXN-" + "".join(rng.choice(alnum) for _ in range(10))


# -- templates ---------------------------------------------------------------

_FIRST_NAMES = (
    "Mary", "Nitin", "Alice", "Bob", "Carol", "David", "Elena", "Farid", "Grace",
    "Hiro", "Irene", "Jamal", "Karen", "Liam", "Mei", "Noah", "Olga", "Pedro",
    "Quinn", "Rosa", "Sven", "Tara", "Umar", "Vera", "Wes", "Yuki", "Zane",
)
_WORK_DOMAINS = ("corp.example.com", "example.com", "corp.example.org", "energy.example.net")
_PERSONAL_DOMAINS = ("hotmail.com", "gmail.com", "yahoo.com", "mailbox.org", "proton.me")
_DAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday")
_PLACES = ("Houston", "Portland", "Denver", "the north office", "the main building")

_SUBJECTS = {
    "finance": ("Q3 budget numbers", "Invoice follow-up", "Expense report", "Money for the offsite",
                "Payroll question", "Vendor payment"),
    "scheduling": ("Meeting next week", "Rescheduling our call", "Calendar update",
                   "Team sync", "Availability"),
    "logistics": ("Shipment status", "Delivery window", "Warehouse update", "Pipeline capacity",
                  "Truck schedule"),
    "smalltalk": ("Weekend plans", "Congrats!", "Lunch?", "Quick hello", "Thanks again"),
}

_SENTENCES = {
    "finance": (
        "The budget for the next quarter needs to be finalized by {day}.",
        "Can you check whether the vendor invoice was paid last week?",
        "We need to move some money between the project accounts before the audit.",
        "Please send me the expense report so I can approve the reimbursement.",
        "The payment to the contractor is still pending on our side.",
        "Finance wants a summary of all funds spent on the {place} project.",
        "I think the wire to the supplier went out yesterday afternoon.",
        "Let's review the billing discrepancy together on {day}.",
        "Payroll will be processed a day early because of the holiday.",
        "The bank confirmed that the deposit cleared this morning.",
        "Could you forward the refund request to the accounting team?",
    ),
    "scheduling": (
        "Can we move our meeting to {day} afternoon?",
        "I have a conflict on {day}, would the following week work?",
        "The team sync will be held in {place} this time.",
        "Please update the calendar invite with the new dial-in details.",
        "I am out of the office until {day} but will check messages.",
        "Let's plan for a thirty minute call to go over the agenda.",
        "Could you send me your availability for the workshop?",
        "The review session has been pushed back by one hour.",
        "We should block some time before the quarterly planning session.",
        "I booked the large conference room for the whole morning.",
    ),
    "logistics": (
        "The shipment left {place} and should arrive by {day}.",
        "Pipeline capacity is limited this week because of maintenance.",
        "The warehouse needs an updated count of the pallets on site.",
        "Please confirm the delivery window with the carrier.",
        "Two trucks were delayed by the storm near {place}.",
        "We are rerouting the gas volumes through the eastern line.",
        "The inventory report will be ready on {day}.",
        "Could you check whether the replacement parts were received?",
        "Loading starts at seven and should finish before noon.",
        "The customs paperwork for the containers is complete.",
    ),
    "smalltalk": (
        "Hope you had a great weekend in {place}.",
        "Congratulations on the new role, well deserved!",
        "Are you free for lunch on {day}?",
        "The kids loved the picnic, thanks for organizing it.",
        "I finally finished the book you recommended.",
        "We should catch up over coffee sometime soon.",
        "Thanks again for your help with the move.",
        "The game last night was unbelievable.",
        "Say hello to the family for me.",
        "I heard the new place near {place} has great tacos.",
    ),
}

# Sentences that sound sensitive but carry no secret; shared by both classes.
_DECOYS = (
    "I will follow up on this soon.",
    "Please never send passwords or personal numbers over email.",
    "IT asked everyone to review their login settings this week.",
    "I will share the details in person rather than in writing.",
    "Ping me if something is missing.",
    "Keep this between us until the announcement.",
)
_DECOY_RATE = 0.3

# (announcement or None, secret line); the secret line holds "{s}".
_CARRIERS = {
    Category.SSN: (
        (None, "My SSN is {s}."),
        (None, "For the tax form, my social security number is {s}."),
        ("My social security number is further down, like we talked about last week.", "{s}."),
        ("You asked for my social security number for the background check.", "Here it is: {s}."),
        (None, "Please use SSN {s} when filing the paperwork."),
        ("As requested, I am including my SSN below.", "{s}"),
    ),
    Category.EMAIL_ADDRESS: (
        (None, "You can reach my private inbox at {s}."),
        (None, "My personal email is {s}, please do not share it."),
        ("I would rather not use the work address for this.", "Send it to {s} instead."),
        (None, "Please add {s} to the recovery contacts."),
        ("As discussed, here is the address I use for personal matters.", "{s}"),
    ),
    Category.PASSWORD: (
        (None, "The password for the shared drive is {s}"),
        (None, "My login password is {s} so please change it after you log in."),
        ("I am sending the credentials we talked about.", "Password: {s}"),
        (None, "Use {s} as the temporary password."),
        ("You asked for the access details earlier.", "It is {s} for now."),
    ),
    Category.CREDIT_CARD: (
        (None, "My card number is {s}."),
        (None, "Please charge the order to credit card {s}."),
        ("The card I want to use is listed near the bottom.", "{s}"),
        (None, "Card: {s}, expiring next year."),
        ("As we discussed, here are the card details for the payment.", "The number is {s}."),
    ),
    Category.ACCOUNT_BALANCE: (
        (None, "My checking account balance is {s} as of this morning."),
        (None, "The current balance on the account is {s}."),
        ("I checked the statement you asked about.", "Balance: {s}."),
        (None, "We have {s} left in the savings account."),
        ("Here is the figure from the bank portal.", "{s} available."),
    ),
    Category.TRANSACTION_ID: (
        (None, "The transaction ID for the transfer is {s}."),
        (None, "Reference {s} for the wire I sent yesterday."),
        ("I am including the confirmation number at the bottom.", "{s}"),
        (None, "Please look up transaction {s} with the bank."),
        ("Following up on the refund we discussed.", "The reference is {s}."),
    ),
}

_OPENINGS = ("Dear {name},", "Hi {name},", "Hello {name},", "{name},")
_CLOSINGS = ("Thanks.\nBest,\n{name}", "Regards,\n{name}", "Cheers,\n{name}", "Thank you,\n{name}")
_BODY_SEP = "\n"


def _address(name: str, rng: random.Random) -> str:
    return f"{name.lower()}{rng.randint(1, 99)}@{rng.choice(_WORK_DOMAINS + _PERSONAL_DOMAINS)}"


def _fill(sentence: str, rng: random.Random) -> str:
    return sentence.format(day=rng.choice(_DAYS), place=rng.choice(_PLACES))


def _assemble(opening: Optional[str], sentences: Sequence[str], closing: Optional[str]) -> str:
    if opening is None:
        return _BODY_SEP.join(sentences)
    return _BODY_SEP.join([opening, *sentences, "", closing])


def _disassemble(body: str) -> tuple[Optional[str], list[str], Optional[str]]:
    lines = body.split(_BODY_SEP)
    if "" not in lines[1:]:
        # unstructured (ingested) body: every line is a sentence slot
        return None, lines, None
    blank = lines.index("", 1)
    return lines[0], lines[1:blank], _BODY_SEP.join(lines[blank + 1:])


def generate_base_email(rng: random.Random, topic: Optional[str] = None) -> EmailRecord:
    """Draw one non-private email; ``topic`` defaults to a uniform pick."""
    topic = rng.choice(TOPICS) if topic is None else topic
    if topic not in _SENTENCES:
        raise InputError(f"unknown topic {topic!r}")
    sender_name, recipient_name = rng.sample(_FIRST_NAMES, 2)
    k = rng.randint(3, 5)
    sentences = [_fill(s, rng) for s in rng.sample(_SENTENCES[topic], k)]
    if rng.random() < _DECOY_RATE:
        sentences.insert(rng.randint(0, len(sentences)), rng.choice(_DECOYS))
    body = _assemble(
        rng.choice(_OPENINGS).format(name=recipient_name),
        sentences,
        rng.choice(_CLOSINGS).format(name=sender_name),
    )
    return EmailRecord(
        id=0,
        sender=_address(sender_name, rng),
        recipient=_address(recipient_name, rng),
        subject=rng.choice(_SUBJECTS[topic]),
        body=body,
    )


_WORD_RE = re.compile(r"[a-z]+")


def detect_context(body: str) -> set[Category]:
    words = set(_WORD_RE.findall(body.lower()))
    found = set(PERSONAL)
    if words & FINANCE_KEYWORDS:
        found.update(FINANCIAL)
    return found


def inject(email: EmailRecord, category: Category, rng: random.Random) -> EmailRecord:
    category = Category(category)
    if category not in detect_context(email.body):
        raise ContextMismatch(f"{category.value} does not fit the context of email {email.id}")
    opening, sentences, closing = _disassemble(email.body)
    announce, line = rng.choice(_CARRIERS[category])
    secret_line = line.format(s=generate_secret(category, rng))
    n = len(sentences)
    if announce is None:
        sentences.insert(rng.randint(0, n), secret_line)
    else:
        # leave at least one sentence between announcement and secret when possible
        a = rng.randint(0, max(n - 1, 0))
        sentences.insert(a, announce)
        lo = a + 2 if n >= 1 else a + 1
        sentences.insert(rng.randint(lo, len(sentences)), secret_line)
    return replace(email, body=_assemble(opening, sentences, closing),
                   label=1, injected_category=category)


def build_dataset(n_private: int, n_nonprivate: int, seed: int) -> Corpus:
    if n_private < 0 or n_nonprivate < 0:
        raise InputError("class counts must be non-negative")
    rng = random.Random(seed)
    records = []
    for _ in range(n_private):
        base = generate_base_email(rng)
        options = [c for c in Category if c in detect_context(base.body)]
        records.append(inject(base, rng.choice(options), rng))
    records.extend(generate_base_email(rng) for _ in range(n_nonprivate))
    rng.shuffle(records)
    return Corpus(tuple(replace(r, id=i) for i, r in enumerate(records)), seed)


def split(corpus: Corpus, train_fraction: float = 0.8, seed: int = 0) -> CorpusSplit:
    """Stratified, seed-deterministic train/test split.

    Each class receives floor(fraction * size) training records; the remaining
    ``round(fraction * total)`` slots go to the classes with the largest
    fractional remainders (ties to the lower label).
    """
    if not 0 < train_fraction < 1:
        raise InputError("train_fraction must lie strictly between 0 and 1")
    rng = random.Random(seed)
    by_label: dict[int, list[int]] = {0: [], 1: []}
    for r in corpus:
        by_label[r.label].append(r.id)
    total = round(train_fraction * len(corpus))
    quota = {lab: int(train_fraction * len(ids)) for lab, ids in by_label.items()}
    leftovers = sorted(by_label, key=lambda lab: (-(train_fraction * len(by_label[lab]) - quota[lab]), lab))
    for lab in leftovers[: max(total - sum(quota.values()), 0)]:
        quota[lab] += 1
    train_ids, test_ids = [], []
    for lab in (0, 1):
        ids = sorted(by_label[lab])
        rng.shuffle(ids)
        train_ids += ids[: quota[lab]]
        test_ids += ids[quota[lab]:]
    return CorpusSplit(corpus.subset(sorted(train_ids)), corpus.subset(sorted(test_ids)))


_REQUIRED_TEXT = ("sender", "recipient", "subject")


def ingest_corpus(path) -> Corpus:
    """Read a JSONL corpus; missing labels default to 0."""
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(lineno, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(obj, dict):
                raise IngestError(lineno, "record is not a JSON object")
            body = obj.get("body")
            if not isinstance(body, str) or not body:
                raise IngestError(lineno, "missing or empty 'body'")
            rid = obj.get("id", len(records))
            if not isinstance(rid, int) or rid in seen:
                raise IngestError(lineno, f"bad or duplicate id {rid!r}")
            seen.add(rid)
            try:
                records.append(EmailRecord(
                    id=rid,
                    body=body,
                    label=obj.get("label", 0),
                    injected_category=obj.get("injected_category"),
                    **{k: str(obj.get(k, "")) for k in _REQUIRED_TEXT},
                ))
            except (InputError, ValueError) as exc:
                raise IngestError(lineno, str(exc)) from exc
    return Corpus(tuple(records))
