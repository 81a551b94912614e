import logging
import math
from typing import Dict, Any, Iterable, Mapping, Tuple
from chalice import Response

logger = logging.getLogger(__name__)

class ValidationError(Exception):
    """Malformed input or configuration"""
    pass

class DomainError(Exception):
    """A computation left the domain where its model is valid"""
    pass

def validate_s3_path(s3_path: str) -> Tuple[str, str]:
    """
    Validate S3 output URI and return bucket and prefix

    Args:
        s3_path: URI of the form s3://bucket/prefix

    Returns:
        Tuple of (bucket_name, prefix)

    Raises:
        ValidationError: If URI is invalid
    """
    if not s3_path:
        raise ValidationError("S3 output path is required")

    if not s3_path.startswith("s3://"):
        raise ValidationError("S3 path must start with 's3://'")

    try:
        bucket_name, prefix = s3_path.replace("s3://", "").split("/", 1)
    except ValueError:
        bucket_name, prefix = s3_path.replace("s3://", ""), ""
    if not bucket_name:
        raise ValidationError("Invalid S3 path format")
    return bucket_name, prefix.strip("/")

def validate_request_body(body: Dict[str, Any], required_fields: Iterable[str], path: str = "") -> None:
    """
    Validate a document contains required fields

    Args:
        body: Request body or config block
        required_fields: List of required field names
        path: Dotted location of the block, used in messages

    Raises:
        ValidationError: If required fields are missing
    """
    for field in required_fields:
        if body.get(field) is None:
            raise ValidationError(f"Missing {_join(path, field)} parameter")

def validate_known_keys(body: Mapping[str, Any], allowed: Iterable[str], path: str = "") -> None:
    """Reject keys that are not part of the block's schema"""
    allowed = set(allowed)
    for key in body:
        if key not in allowed:
            raise ValidationError(f"Unknown key {_join(path, key)}")

def validate_positive(value: Any, name: str) -> float:
    number = validate_number(value, name)
    if number <= 0:
        raise ValidationError(f"{name} must be positive, got {number}")
    return number

def validate_number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{name} must be a number")
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite")
    return float(value)

def validate_integer(value: Any, name: str, minimum: int = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{name} must be an integer")
    if minimum is not None and value < minimum:
        raise ValidationError(f"{name} must be at least {minimum}, got {value}")
    return value

def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key

def create_error_response(error: str, details: str = "", error_type: str = "server", status_code: int = 400) -> Response:
    """
    Create standardized error response

    Args:
        error: Error message
        details: Additional error details
        error_type: Type of error (validation, domain, server)
        status_code: HTTP status code

    Returns:
        Chalice Response object
    """
    return Response(
        body={
            "error": error,
            "details": details,
            "type": error_type
        },
        status_code=status_code
    )

def create_success_response(data: Any, status_code: int = 200) -> Response:
    """
    Create standardized success response

    Args:
        data: Response data
        status_code: HTTP status code

    Returns:
        Chalice Response object
    """
    return Response(
        body=data,
        status_code=status_code
    )
