from __future__ import annotations

import pytest

from docxbuild import make_docx


@pytest.fixture
def sample_docx(tmp_path):
    """A small judgment with quote, citation, and keyword paragraphs."""
    return make_docx(
        tmp_path / "s01.docx",
        [
            "La Corte ha affermato “il principio va tutelato” in ogni sede.",
            "   ",
            "Le spese vanno poste a carico dell’Erario (Corte Cost. 217/2019)",
            "Il Tribunale osserva, senza virgolette, che nulla rileva.",
        ],
        pages=5,
    )
