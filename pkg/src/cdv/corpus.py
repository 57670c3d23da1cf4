"""Heading-structured documents: loading, labels, passages, truncation.

Corpus files are line-delimited JSON, one document per line:

    {"id": "...", "title": "...", "entity_id": "...", "source": "...",
     "sections": [{"heading": "...",
                   "paragraphs": [["sentence", ...] | "raw paragraph text", ...],
                   "links": [{"sentence_index": 0, "entity_id": "..."}, ...],
                   "list_item_sentence_indices": [...]}]}

A paragraph given as a list is taken as pre-split sentences; a paragraph
given as a string is split with the rule-based sentence splitter below.
``sentence_index`` in links and list-item indices count sentences within
the section, in order, after splitting. A minimal example is checked in
under ``data/sample/``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import IntegrityError, ParseError

ABSTRACT_ASPECT = "information"

# Tokens that commonly precede a period without ending the sentence.
_ABBREVIATIONS = {
    "dr", "mr", "mrs", "ms", "prof", "st", "no", "vs", "etc",
    "fig", "eq", "al", "e.g", "i.e", "approx", "resp",
}

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_BOUNDARY_RE = re.compile(r"[.!?]+(?=\s+[\"'(\[]?[A-Z0-9])")
_HEADING_SPLIT_RE = re.compile(r"(?<![a-z0-9])and(?![a-z0-9])|&")


@dataclass
class Sentence:
    text: str
    tokens: list[str]
    entity_links: set[str] = field(default_factory=set)
    begin_of_document: bool = False
    end_of_document: bool = False
    begin_of_paragraph: bool = False
    end_of_paragraph: bool = False
    is_list_item: bool = False

    def flag_vector(self) -> tuple[int, int, int, int, int]:
        return (
            int(self.begin_of_document),
            int(self.end_of_document),
            int(self.begin_of_paragraph),
            int(self.end_of_paragraph),
            int(self.is_list_item),
        )


@dataclass
class Section:
    heading: str
    sentences: list[Sentence]


@dataclass
class Document:
    doc_id: str
    title: str
    title_entity_id: str
    sections: list[Section]
    source_tag: str = ""

    @property
    def sentences(self) -> list[Sentence]:
        return [s for sec in self.sections for s in sec.sentences]

    @property
    def sentence_count(self) -> int:
        return sum(len(sec.sentences) for sec in self.sections)


@dataclass
class Passage:
    passage_id: str
    doc_id: str
    start: int
    end: int  # exclusive, indices into the document's global sentence order
    heading: str


@dataclass
class SentenceLabels:
    entities: set[str]
    aspects: set[str]


def tokenize(text: str) -> list[str]:
    """Lowercase tokens split at non-alphanumeric boundaries, digits kept."""
    return _TOKEN_RE.findall(text.lower())


def split_sentences(text: str) -> list[str]:
    """Rule-based splitter: terminal punctuation followed by whitespace and
    an uppercase letter or digit, with an abbreviation allowlist."""
    cuts = []
    for m in _BOUNDARY_RE.finditer(text):
        prev = re.search(r"([A-Za-z][A-Za-z.]*)$", text[: m.start()])
        if prev and prev.group(1).lower().rstrip(".") in _ABBREVIATIONS:
            continue
        cuts.append(m.end())
    parts = []
    last = 0
    for cut in cuts:
        parts.append(text[last:cut])
        last = cut
    parts.append(text[last:])
    return [p.strip() for p in parts if p.strip()]


def heading_normalize(raw: str) -> list[str]:
    """Lowercase, split at standalone "and" / "&", strip punctuation.

    Fragments keep internal spaces ("risk factors"); empty fragments drop.
    """
    out = []
    for frag in _HEADING_SPLIT_RE.split(raw.lower()):
        cleaned = "".join(ch if (ch.isascii() and ch.isalnum()) else " " for ch in frag)
        cleaned = " ".join(cleaned.split())
        if cleaned:
            out.append(cleaned)
    return out


def _parse_section(raw_sec, path, line_no, doc_id) -> Section:
    heading = raw_sec.get("heading", "")
    paragraphs = raw_sec.get("paragraphs")
    if not isinstance(paragraphs, list):
        raise ParseError("section without a paragraphs list", path, line_no, doc_id)
    sentences: list[Sentence] = []
    for para in paragraphs:
        if isinstance(para, str):
            texts = split_sentences(para)
        elif isinstance(para, list):
            texts = [t for t in para if isinstance(t, str)]
            if len(texts) != len(para):
                raise ParseError("paragraph entries must be strings", path, line_no, doc_id)
        else:
            raise ParseError("paragraph must be a string or list of strings", path, line_no, doc_id)
        para_sentences = []
        for text in texts:
            tokens = tokenize(text)
            if not tokens:
                continue  # whitespace/punctuation-only sentences carry no signal
            para_sentences.append(Sentence(text=text, tokens=tokens))
        if para_sentences:
            para_sentences[0].begin_of_paragraph = True
            para_sentences[-1].end_of_paragraph = True
        sentences.extend(para_sentences)
    for entry in raw_sec.get("links", []):
        idx = entry.get("sentence_index")
        eid = entry.get("entity_id")
        if not isinstance(idx, int) or not isinstance(eid, str):
            raise ParseError("link needs sentence_index and entity_id", path, line_no, doc_id)
        if 0 <= idx < len(sentences):
            sentences[idx].entity_links.add(eid)
        else:
            raise ParseError(f"link sentence_index {idx} out of range", path, line_no, doc_id)
    for idx in raw_sec.get("list_item_sentence_indices", []):
        if not isinstance(idx, int) or not (0 <= idx < len(sentences)):
            raise ParseError(f"list-item index {idx} out of range", path, line_no, doc_id)
        sentences[idx].is_list_item = True
    return Section(heading=heading, sentences=sentences)


def parse_document(record: dict, path=None, line_no=None) -> Document:
    doc_id = record.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise ParseError("record missing id", path, line_no)
    for key in ("title", "entity_id"):
        if not isinstance(record.get(key), str) or not record[key]:
            raise ParseError(f"record missing {key}", path, line_no, doc_id)
    raw_sections = record.get("sections")
    if not isinstance(raw_sections, list) or not raw_sections:
        raise ParseError("record needs a nonempty sections list", path, line_no, doc_id)
    sections = [_parse_section(sec, path, line_no, doc_id) for sec in raw_sections]
    sections = [sec for sec in sections if sec.sentences]
    doc = Document(
        doc_id=doc_id,
        title=record["title"],
        title_entity_id=record["entity_id"],
        sections=sections,
        source_tag=record.get("source", ""),
    )
    if doc.sentence_count == 0:
        raise ParseError("document has no usable sentences", path, line_no, doc_id)
    doc.sentences[0].begin_of_document = True
    doc.sentences[-1].end_of_document = True
    return doc


def load_corpus(path) -> list[Document]:
    """Load all documents from a line-delimited corpus file, in file order."""
    docs: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path, line_no) from exc
            doc = parse_document(record, path, line_no)
            if doc.doc_id in seen:
                raise IntegrityError(f"duplicate doc_id {doc.doc_id!r} at line {line_no}")
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


def derive_labels(doc: Document) -> list[SentenceLabels]:
    """Self-supervision labels: title entity plus linked entities; the
    enclosing heading's fragments, or "information" for the abstract."""
    labels = []
    for sec in doc.sections:
        fragments = heading_normalize(sec.heading)
        aspects = set(fragments) if fragments else {ABSTRACT_ASPECT}
        for sent in sec.sentences:
            labels.append(
                SentenceLabels(
                    entities={doc.title_entity_id} | set(sent.entity_links),
                    aspects=set(aspects),
                )
            )
    return labels


def build_passages(doc: Document) -> list[Passage]:
    """One passage per section, covering its global sentence range."""
    passages = []
    offset = 0
    for i, sec in enumerate(doc.sections):
        end = offset + len(sec.sentences)
        heading = sec.heading if sec.heading.strip() else ABSTRACT_ASPECT
        passages.append(
            Passage(
                passage_id=f"{doc.doc_id}:{i}",
                doc_id=doc.doc_id,
                start=offset,
                end=end,
                heading=heading,
            )
        )
        offset = end
    return passages


def truncate_for_training(doc: Document, max_sentences: int, max_tokens: int) -> Document:
    """Clip a document for training; flags are recomputed at the new end."""
    if max_sentences < 1 or max_tokens < 1:
        raise ValueError("truncation limits must be >= 1")
    new_sections = []
    budget = max_sentences
    for sec in doc.sections:
        if budget <= 0:
            break
        kept = []
        for sent in sec.sentences[:budget]:
            kept.append(replace(sent, tokens=sent.tokens[:max_tokens], entity_links=set(sent.entity_links)))
        budget -= len(kept)
        new_sections.append(Section(heading=sec.heading, sentences=kept))
    out = Document(
        doc_id=doc.doc_id,
        title=doc.title,
        title_entity_id=doc.title_entity_id,
        sections=new_sections,
        source_tag=doc.source_tag,
    )
    last = out.sentences[-1]
    last.end_of_document = True
    last.end_of_paragraph = True
    return out
