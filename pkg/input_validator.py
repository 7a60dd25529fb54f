import json
import logging
import re
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, validator

from coxeter import AFFINE_RANK3_TYPES, NAMED_TYPES
from errors import FixtureValidationError

logger = logging.getLogger("input_validator")

SUPPORTED_GONALITIES = (3, 4, 6)
_HEADER = re.compile(r"^gonality\s+(\d+)$", re.IGNORECASE)
_FLAG = re.compile(r"^P(\d+)\s+L(\d+)$")


class ValidationResult:
    """Result of input validation"""
    def __init__(self, is_valid: bool, error: Optional[str] = None):
        self.is_valid = is_valid
        self.error = error


class CoxeterTypeInput(BaseModel):
    """Named Coxeter type"""
    name: str = Field(..., min_length=1, max_length=16)

    @validator('name')
    def validate_name(cls, v):
        if v not in NAMED_TYPES:
            raise ValueError(f"Unknown Coxeter type. Must be one of: {', '.join(NAMED_TYPES)}")
        return v


class IncidenceFileInput(BaseModel):
    """Point-line incidence data of a rank-2 geometry"""
    gonality: int
    flags: List[Tuple[int, int]]

    @validator('gonality')
    def validate_gonality(cls, v):
        if v not in SUPPORTED_GONALITIES:
            raise ValueError(f"Gonality must be one of {SUPPORTED_GONALITIES}")
        return v

    @validator('flags')
    def validate_flags(cls, v):
        if not v:
            raise ValueError("At least one flag is required")
        if len(set(v)) != len(v):
            raise ValueError("Duplicate flag lines")
        return v

    @classmethod
    def from_text(cls, text: str) -> "IncidenceFileInput":
        gonality = None
        flags = []
        problems = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            header = _HEADER.match(line)
            if header:
                if gonality is not None:
                    problems.append(f"line {number}: second gonality header")
                gonality = int(header.group(1))
                continue
            flag = _FLAG.match(line)
            if flag is None:
                problems.append(f"line {number}: expected 'P<i> L<j>', got {line!r}")
                continue
            if gonality is None:
                problems.append(f"line {number}: flag before the gonality header")
            flags.append((int(flag.group(1)), int(flag.group(2))))
        if gonality is None:
            problems.append("missing 'gonality m' header")
        if problems:
            raise ValueError("; ".join(problems))
        return cls(gonality=gonality, flags=flags)


class IsometryMapInput(BaseModel):
    """Plus-half isometry as id pairs plus the admissible minus pair"""
    plus: List[Tuple[int, int]]
    minus: Tuple[int, int]

    @validator('plus')
    def validate_plus(cls, v):
        sources = [a for a, _ in v]
        images = [b for _, b in v]
        if min(sources + images, default=0) < 0:
            raise ValueError("Chamber ids must be non-negative")
        if len(set(sources)) != len(sources) or len(set(images)) != len(images):
            raise ValueError("Plus map must be injective")
        return v

    @validator('minus')
    def validate_minus(cls, v):
        if min(v) < 0:
            raise ValueError("Chamber ids must be non-negative")
        return v


class CertificateEntryInput(BaseModel):
    """One root of an affine certificate with its vertex fan"""
    gamma: List[int]
    vertex: List[List[int]]
    fan: List[List[int]] = Field(..., min_items=2)
    ell: int = Field(..., ge=1)

    @validator('vertex')
    def validate_vertex(cls, v):
        if len(v) != 2:
            raise ValueError("A vertex is given by its two bounding roots")
        return v


class CertificateInput(BaseModel):
    """Weyl-level wall-connectedness certificate"""
    type: str
    s: int = Field(..., ge=0)
    depth: int = Field(..., ge=1)
    entries: List[CertificateEntryInput]

    @validator('type')
    def validate_type(cls, v):
        if v not in AFFINE_RANK3_TYPES:
            raise ValueError(f"Certificate type must be one of {AFFINE_RANK3_TYPES}")
        return v


class RootGeneratorInput(BaseModel):
    """One generator matrix of a root subgroup"""
    coords: List[int] = Field(..., min_items=1)
    rows: List[List[int]] = Field(..., min_items=1)


class GeneratorFileInput(BaseModel):
    """Root-subgroup generators of a matrix group over F_q"""
    family: str = Field(..., min_length=1)
    type: str
    field: int
    dimension: int
    form: str = "none"
    generators: List[RootGeneratorInput] = Field(..., min_items=1)

    @validator('type')
    def validate_type(cls, v):
        if v not in NAMED_TYPES:
            raise ValueError(f"Unknown Coxeter type {v}")
        return v

    @validator('field')
    def validate_field(cls, v):
        if v not in (2, 3):
            raise ValueError("Field size must be 2 or 3")
        return v

    @validator('dimension')
    def validate_dimension(cls, v):
        if v not in (3, 4):
            raise ValueError("Dimension must be 3 or 4")
        return v

    @validator('form')
    def validate_form(cls, v):
        if v not in ("none", "antidiagonal"):
            raise ValueError("Form must be 'none' or 'antidiagonal'")
        return v

    @validator('generators')
    def validate_generators(cls, v, values):
        n, q = values.get('dimension'), values.get('field')
        if n is None or q is None:
            return v
        for generator in v:
            if len(generator.rows) != n or any(len(row) != n for row in generator.rows):
                raise ValueError(f"Generator for root {generator.coords} is not {n}x{n}")
            if any(not 0 <= entry < q for row in generator.rows for entry in row):
                raise ValueError(f"Generator for root {generator.coords} has entries outside F_{q}")
        return v

    @classmethod
    def from_text(cls, text: str) -> "GeneratorFileInput":
        header: Dict[str, str] = {}
        generators = []
        problems = []
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if fields[0] in ("family", "type", "field", "dimension", "form") and len(fields) == 2:
                header[fields[0]] = fields[1]
            elif fields[0] == "root" and all(f.lstrip("-").isdigit() for f in fields[1:]) and len(fields) > 1:
                generators.append({"coords": [int(f) for f in fields[1:]], "rows": []})
            elif all(f.isdigit() for f in fields) and generators:
                generators[-1]["rows"].append([int(f) for f in fields])
            else:
                problems.append(f"line {number}: cannot read {line!r}")
        for key in ("family", "type", "field", "dimension"):
            if key not in header:
                problems.append(f"missing '{key}' header")
        if problems:
            raise ValueError("; ".join(problems))
        return cls(generators=generators, **header)


class BoundsInput(BaseModel):
    """Numeric CLI options"""
    k: Optional[int] = Field(None, ge=0)
    bound: Optional[int] = Field(None, ge=1)
    depth: Optional[int] = Field(None, ge=1)
    samples: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = Field(None, ge=0)


def _error_text(e: ValidationError) -> str:
    return "; ".join(err["msg"] for err in e.errors())


class InputValidator:
    """Input validation service"""

    @staticmethod
    def validate_coxeter_type(data: Dict[str, Any]) -> ValidationResult:
        """Validate a named Coxeter type"""
        try:
            CoxeterTypeInput(**data)
            return ValidationResult(True)
        except ValidationError as e:
            error = _error_text(e)
            logger.warning(f"Coxeter type validation failed: {error}")
            return ValidationResult(False, error)

    @staticmethod
    def validate_incidence(text: str) -> ValidationResult:
        """Validate incidence file syntax"""
        try:
            IncidenceFileInput.from_text(text)
            return ValidationResult(True)
        except ValidationError as e:
            error = _error_text(e)
        except ValueError as e:
            error = str(e)
        logger.warning(f"Incidence validation failed: {error}")
        return ValidationResult(False, error)

    @staticmethod
    def validate_bounds(data: Dict[str, Any]) -> ValidationResult:
        """Validate numeric options"""
        try:
            BoundsInput(**data)
            return ValidationResult(True)
        except ValidationError as e:
            error = _error_text(e)
            logger.warning(f"Bounds validation failed: {error}")
            return ValidationResult(False, error)


def parse_incidence_text(text: str, source: str = "incidence file") -> IncidenceFileInput:
    try:
        return IncidenceFileInput.from_text(text)
    except ValidationError as e:
        raise FixtureValidationError(source, [err["msg"] for err in e.errors()])
    except ValueError as e:
        raise FixtureValidationError(source, str(e).split("; "))


def parse_generator_text(text: str, source: str = "generator file") -> GeneratorFileInput:
    try:
        return GeneratorFileInput.from_text(text)
    except ValidationError as e:
        raise FixtureValidationError(source, [err["msg"] for err in e.errors()])
    except ValueError as e:
        raise FixtureValidationError(source, str(e).split("; "))


def parse_isometry_map(text: str, source: str = "isometry map") -> IsometryMapInput:
    try:
        return IsometryMapInput(**json.loads(text))
    except json.JSONDecodeError as e:
        raise FixtureValidationError(source, [f"not JSON: {e}"])
    except (ValidationError, TypeError) as e:
        messages = [err["msg"] for err in e.errors()] if isinstance(e, ValidationError) else [str(e)]
        raise FixtureValidationError(source, messages)


def parse_certificate(text: str, source: str = "certificate") -> CertificateInput:
    try:
        return CertificateInput(**json.loads(text))
    except json.JSONDecodeError as e:
        raise FixtureValidationError(source, [f"not JSON: {e}"])
    except (ValidationError, TypeError) as e:
        messages = [err["msg"] for err in e.errors()] if isinstance(e, ValidationError) else [str(e)]
        raise FixtureValidationError(source, messages)


# Global validator instance
_validator = None

def get_validator() -> InputValidator:
    """Get or create the global validator instance"""
    global _validator
    if _validator is None:
        _validator = InputValidator()
    return _validator
