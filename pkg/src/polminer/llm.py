"""Prompted LLM extraction behind a transport abstraction.

The canonical prompt asks for paragraphs naming a court-like authority
followed by a quoted passage, paragraphs whose quoted passage is followed by
a parenthesized number, and sentences ending in a parenthesized number, with
verbatim-copy directives appended. Italian is the default wording; an
English variant is available.

Transports: a generic JSON-over-HTTP chat-completions client and an offline
scripted transport for tests and dry runs. Every extraction request carries
exactly one document; sessions cap the number of queries before a mandatory
reset, since long chat sessions were observed to leak content across
documents.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .corpus import Document
from .errors import BudgetExceeded, EmptyResponse, TransportError
from .extractor import PoLCandidate, Source, classify
from .patterns import find_citations, find_quotes
from .patterns.rules import V2_REFINED
from .textnorm import containment, raw_token_counts

_BODY_IT = (
    "Estrai i paragrafi in cui c’è la parola CORTE, TRIBUNALE, "
    "GIURISPRUDENZA, COLLEGIO, CONSESSO, CASSAZIONE e simili seguita da un "
    "passaggio tra virgolette.\n"
    "Anche i paragrafi in cui c’è un passaggio tra virgolette "
    "seguito da un numero tra parentesi.\n"
    "Anche i paragrafi fino al punto a capo in cui figurano le espressioni "
    "‘la giurisprudenza ha sostenuto che…’, ‘come la "
    "corte ha statuito…’, ‘affermata giurisprudenza…’, "
    "‘il principio stabilito dalla corte…’, seguite o "
    "precedute da un numero.\n"
    "Anche tutte le frasi che prima del punto terminano con un numero tra "
    "parentesi."
)

_DIRECTIVES_IT = (
    "COPIA PEDISSEQUAMENTE I PASSAGGI DAL SINGOLO FILE CARICATO. "
    "ESPORTA PEDISSEQUAMENTE COSI’ COME SONO DAL SINGOLO FILE CARICATO. "
    "NON INVENTARE. NON RIASSUMERE. NON ASSEMBLARE. "
    "Segui dettagliatamente le istruzioni."
)

_EXAMPLES_IT = (
    "La stessa Corte di Cassazione, pronunciandosi a Sezioni Unite, ha di "
    "recente affermato che si tratta di casi “che interrogano "
    "profondamente la coscienza individuale e collettiva, ponendo questioni "
    "delicate e complesse, suscettibili di soluzioni differenziate”.",
    "Si tratta di casi “che interrogano profondamente la coscienza "
    "individuale e collettiva, ponendo questioni delicate e complesse, "
    "suscettibili di soluzioni differenziate” (cfr. Cass. S.U. Civili "
    "n. 12193/19).",
    "Il riconoscimento del primario diritto alla identità sessuale, "
    "sotteso alla disposta rettificazione dell'attribuzione di sesso, rende "
    "consequenziale la rettificazione del prenome (Cass. Civ. 3877/2020).",
    "Le spese della ctu, nella misura liquidata con separato decreto e "
    "operata la dimidiazione prevista dall'art. 130 tusg, vanno poste a "
    "carico dell'Erario (Corte Cost. 217/2019).",
)

_BODY_EN = (
    "Extract the paragraphs in which there is the word COURT, TRIBUNAL, "
    "JURISPRUDENCE, COLLEGE, CONSESSION, CASSATION and similar followed by a "
    "passage in quotation marks.\n"
    "Also paragraphs where there is a passage in quotation marks followed by "
    "a number in parenthesis.\n"
    "Also paragraphs until a new one where the expressions 'jurisprudence "
    "has held that...', 'as the court has ruled...', 'established "
    "jurisprudence...', 'the principle established by the court...', appear "
    "followed or preceded by a number.\n"
    "Also all phrases that end with a number in brackets before the full "
    "stop."
)

_DIRECTIVES_EN = (
    "EXACTLY COPY THE PASSAGES FROM THE SINGLE UPLOADED FILE. "
    "EXACTLY EXPORT THEM AS THEY ARE FROM THE SINGLE UPLOADED FILE. "
    "DO NOT INVENT. DO NOT SUMMARIZE. DO NOT ASSEMBLE. "
    "Follow the instructions in detail."
)

_EXAMPLES_EN = (
    "The Court of Cassation itself, ruling in United Sections, recently "
    "stated that these are cases “which profoundly question individual "
    "and collective conscience, posing delicate and complex questions, "
    "susceptible to differentiated solutions”.",
    "These are cases “that deeply question individual and collective "
    "conscience, posing delicate and complex questions, susceptible to "
    "differentiated solutions” (see Cass. Civil U.S. n. 12193/19).",
    "The expenses of the ctu, in the amount paid by separate decree and the "
    "halving provided for by the art. 130 tusg, must be paid by the "
    "Treasury (Cost. Court 217/2019).",
)


@dataclass(frozen=True)
class PromptTemplate:
    body: str
    few_shot_examples: tuple[str, ...]
    directives: str
    example_label: str = "Esempio:"

    @classmethod
    def for_language(cls, language: str) -> "PromptTemplate":
        if language == "it":
            return cls(_BODY_IT, _EXAMPLES_IT, _DIRECTIVES_IT, "Esempio:")
        if language == "en":
            return cls(_BODY_EN, _EXAMPLES_EN, _DIRECTIVES_EN, "Example:")
        raise ValueError(f"unsupported prompt language {language!r}")


def build_prompt(template: PromptTemplate | None = None, language: str = "it") -> str:
    """Deterministic concatenation: body, few-shot examples, directives."""
    tpl = template or PromptTemplate.for_language(language)
    blocks = [tpl.body]
    blocks.extend(f"{tpl.example_label} {example}" for example in tpl.few_shot_examples)
    blocks.append(tpl.directives)
    return "\n\n".join(blocks)


@dataclass
class LlmSession:
    endpoint: str = ""
    model_name: str = "offline-mock"
    temperature: float | None = None
    max_queries_per_session: int = 5
    queries_sent: int = 0
    audit_path: str | None = None


def reset_session(session: LlmSession) -> LlmSession:
    """Fresh session with the same configuration and no carried context."""
    return dataclasses.replace(session, queries_sent=0)


class Transport(Protocol):
    def send(self, prompt: str, document: Document) -> str:
        """Submit one prompt plus one document; return the raw response text."""
        ...


class HttpChatTransport:
    """Minimal JSON-over-HTTP chat-completions client."""

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        temperature: float | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint
        self.model_name = model_name
        self.temperature = temperature
        self.api_key = api_key
        self.timeout = timeout

    def send(self, prompt: str, document: Document) -> str:
        import requests

        payload: dict = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": f"{prompt}\n\n{document.text}"}],
        }
        if self.temperature is not None:
            payload["temperature"] = self.temperature
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = requests.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(f"request to {self.endpoint} failed: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"{self.endpoint} returned HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected response shape from {self.endpoint}") from exc


@dataclass
class ScriptedTransport:
    """Offline transport replaying canned responses keyed by doc_id."""

    responses: dict[str, str]
    requests_seen: list[tuple[str, str, str]] = field(default_factory=list)

    def send(self, prompt: str, document: Document) -> str:
        self.requests_seen.append((prompt, document.doc_id, document.text))
        try:
            return self.responses[document.doc_id]
        except KeyError:
            raise TransportError(f"no scripted response for {document.doc_id!r}") from None


_LIST_MARKER = re.compile(r"^\s*(?:\d+[.)]\s+|[-•*]\s+)")


def split_passages(response: str) -> list[str]:
    """Split a response into candidate passages.

    Blank lines separate blocks; within a block, each list-marker line
    starts a new passage. A block without markers is one passage.
    """
    passages: list[str] = []
    for block in re.split(r"\n\s*\n", response.strip()):
        lines = [line for line in block.splitlines() if line.strip()]
        if not lines:
            continue
        current: list[str] = []
        for line in lines:
            if _LIST_MARKER.match(line) and current:
                passages.append(" ".join(current))
                current = []
            current.append(_LIST_MARKER.sub("", line, count=1).strip())
        if current:
            passages.append(" ".join(current))
    return [p for p in passages if p]


def resolve_paragraph(passage: str, document: Document, threshold: float = 0.6) -> int:
    """Index of the paragraph best containing the passage, or -1.

    Containment is the fraction of passage tokens (as written) present in
    the paragraph; below the threshold the passage is unresolved and flagged
    for hallucination triage downstream.
    """
    passage_counts = raw_token_counts(passage)
    best_index, best_score = -1, 0.0
    for para in document.paragraphs:
        score = containment(passage_counts, raw_token_counts(para.text))
        if score > best_score:
            best_index, best_score = para.index, score
    return best_index if best_score >= threshold else -1


def run_extraction(
    document: Document,
    session: LlmSession,
    transport: Transport,
    template: PromptTemplate | None = None,
    language: str = "it",
    resolution_threshold: float = 0.6,
) -> list[PoLCandidate]:
    """Submit one document and parse the response into LLM-source candidates.

    One document per request; the payload never contains text from a
    previously processed document. Raises BudgetExceeded once the session's
    query budget is spent.
    """
    if session.queries_sent >= session.max_queries_per_session:
        raise BudgetExceeded(
            f"session sent {session.queries_sent} of "
            f"{session.max_queries_per_session} queries; reset it first"
        )
    prompt = build_prompt(template, language)
    response = transport.send(prompt, document)
    session.queries_sent += 1
    _audit(session, document, prompt, response)
    if not response or not response.strip():
        raise EmptyResponse(f"empty response for {document.doc_id}")

    candidates: list[PoLCandidate] = []
    for passage in split_passages(response):
        quotes = find_quotes(passage, V2_REFINED)
        citations = tuple(find_citations(passage))
        quote = quotes[0].text if quotes else ""
        candidates.append(
            PoLCandidate(
                doc_id=document.doc_id,
                paragraph_index=resolve_paragraph(passage, document, resolution_threshold),
                text=passage,
                quote=quote,
                trigger=None,
                pol_type=classify(quote, citations),
                citations=citations,
                source=Source.LLM,
            )
        )
    return candidates


def _audit(session: LlmSession, document: Document, prompt: str, response: str) -> None:
    if not session.audit_path:
        return
    record = {
        "endpoint": session.endpoint,
        "model_name": session.model_name,
        "temperature": session.temperature,
        "doc_id": document.doc_id,
        "query_number": session.queries_sent,
        "prompt": prompt,
        "response": response,
    }
    path = Path(session.audit_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record, ensure_ascii=False) + "\n")
