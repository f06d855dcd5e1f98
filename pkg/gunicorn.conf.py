from app.flask_config import Config

bind = "0.0.0.0:5000"

is_prod = Config.PRODUCTION == "true"

# Preload para compartilhar o checkpoint e o backend entre workers via COW
preload_app = True

max_requests = 200
max_requests_jitter = 50

# Reconstrução e codificação em CPU podem levar alguns segundos por requisição
timeout = 120 if is_prod else 300
graceful_timeout = 30
keepalive = 5

worker_class = "gthread"
workers = 1
# RecognitionController serializa o carregamento; o backend declara se aceita chamadas concorrentes
threads = 4 if is_prod else 2

accesslog = "-"
errorlog = "-"
