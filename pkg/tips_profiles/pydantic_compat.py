from typing import Any, Dict, Optional, Type, TypeVar

import pydantic
from packaging.version import parse
from pydantic.version import VERSION

version_parsed = parse(str(VERSION))

if version_parsed.major >= 2:
    PydanticVersion = 2
    # Check for v2.11+ which renamed config keys
    PYDANTIC_V2_11_PLUS = version_parsed >= parse("2.11.0")
else:
    PydanticVersion = 1
    PYDANTIC_V2_11_PLUS = False


BaseModel: type = pydantic.BaseModel
Field: type = pydantic.Field
PydanticValidationError: type = pydantic.ValidationError

# Import ConfigDict for Pydantic V2, None for V1
if PydanticVersion >= 2:
    from pydantic import ConfigDict
else:
    ConfigDict = None  # type: ignore[misc, assignment]

ModelT = TypeVar("ModelT")


def model_dump_compat(instance: BaseModel, **kwargs) -> dict:
    """
    Compatibility wrapper for model serialization.
    Uses .model_dump() for Pydantic V2, .dict() for V1.
    """
    if PydanticVersion >= 2:
        return instance.model_dump(**kwargs)
    return instance.dict(**kwargs)


def model_validate_compat(cls: Type[ModelT], data: Any) -> ModelT:
    """
    Build ``cls`` from plain data.
    Uses .model_validate() for Pydantic V2, .parse_obj() for V1.
    """
    if PydanticVersion >= 2:
        return cls.model_validate(data)  # type: ignore[attr-defined]
    return cls.parse_obj(data)  # type: ignore[attr-defined]


def model_copy_compat(instance: ModelT, update: Optional[Dict[str, Any]] = None) -> ModelT:
    """
    Copy a (frozen) model with some fields replaced.
    Uses .model_copy() for Pydantic V2, .copy() for V1.
    """
    if PydanticVersion >= 2:
        return instance.model_copy(update=update or {})  # type: ignore[attr-defined]
    return instance.copy(update=update or {})  # type: ignore[attr-defined]


def get_model_config(frozen: bool = True) -> dict:
    """
    Returns the appropriate model config for the current Pydantic version.
    For V2.11+: uses validate_by_name and validate_by_alias
    For V2 < 2.11: uses populate_by_name
    For V1: returns empty dict (Config class should be used instead)
    """
    if PydanticVersion >= 2:
        config: dict = {"frozen": frozen}
        if PYDANTIC_V2_11_PLUS:
            config.update({"validate_by_name": True, "validate_by_alias": True})
        else:
            config["populate_by_name"] = True
        return config
    return {}


__all__ = [
    "BaseModel",
    "Field",
    "ConfigDict",
    "PydanticValidationError",
    "model_dump_compat",
    "model_validate_compat",
    "model_copy_compat",
    "get_model_config",
    "PydanticVersion",
    "PYDANTIC_V2_11_PLUS",
]
