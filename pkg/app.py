from chalice import Chalice, CORSConfig
import logging
from dotenv import load_dotenv

# Import modular services
from chalicelib.utils.config import parse_spectrum
from chalicelib.utils.validators import (
    validate_request_body, validate_known_keys, create_error_response,
    create_success_response, ValidationError, DomainError
)
from chalicelib.services.correlation_service import correlation_service
from chalicelib.services.estimation_service import estimation_service

# Load environment variables
load_dotenv()

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# CORS configuration
cors_config = CORSConfig(
    allow_origin='http://localhost:3000',
    max_age=600,
)

# Initialize Chalice app
app = Chalice(app_name='squeezer-api')

ITEM_KEYS = ('order', 'beam', 'spectrum')
MEASURED_KEYS = ('g2', 'g3', 'g11', 'points', 'lambda', 'beam')


@app.route('/')
def index():
    """Health check endpoint"""
    return {'service': 'squeezer-api', 'status': 'ok'}


@app.route('/correlations', methods=['POST'], cors=cors_config)
def correlations():
    """
    Evaluate closed-form correlation functions for a batch of spectra
    Expected payload: {"items": [{"order": "g2", "beam": "twin", "spectrum": {"r": [...]}}]}
    """
    def handler(body):
        validate_request_body(body, ['items'])
        items = body['items']
        if not isinstance(items, list) or not items:
            raise ValidationError("items must be a non-empty list")
        requests = []
        for index, item in enumerate(items):
            path = f"items[{index}]"
            if not isinstance(item, dict):
                raise ValidationError(f"{path} must be a JSON object")
            validate_known_keys(item, ITEM_KEYS, path)
            validate_request_body(item, ['order', 'spectrum'], path)
            spectrum = parse_spectrum(item['spectrum'], f"{path}.spectrum")
            requests.append({'order': item['order'], 'beam': item.get('beam', 'twin'), 'spectrum': spectrum})
        logger.info(f"Evaluating {len(requests)} correlation requests")
        return correlation_service.evaluate_batch(requests)

    return _respond(handler, "correlation evaluation")


@app.route('/estimate', methods=['POST'], cors=cors_config)
def estimate():
    """
    Estimate K, mu and B from measured correlation values
    Expected payload: {"g2": 1.25, "g11": 40.0, "beam": "twin"}
    """
    def handler(body):
        validate_known_keys(body, MEASURED_KEYS)
        results = estimation_service.estimate_from_measurements(body)
        return [result.to_dict() for result in results]

    return _respond(handler, "estimation")


def _respond(handler, operation: str):
    try:
        body = app.current_request.json_body or {}
        if not isinstance(body, dict):
            raise ValidationError("request body must be a JSON object")
        logger.info(f"{operation} request received")
        return create_success_response(handler(body))

    except ValidationError as e:
        logger.error(f"Validation error: {str(e)}")
        return create_error_response(
            error="Validation error",
            details=str(e),
            error_type="validation",
            status_code=400
        )
    except DomainError as e:
        logger.error(f"Domain error: {str(e)}")
        return create_error_response(
            error="Domain error",
            details=str(e),
            error_type="domain",
            status_code=422
        )
    except Exception as e:
        logger.error(f"Unexpected error during {operation}: {str(e)}")
        return create_error_response(
            error="Internal server error",
            details=f"An unexpected error occurred during {operation}",
            error_type="server",
            status_code=500
        )
